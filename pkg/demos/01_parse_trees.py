"""Reading bracketed constituency trees.

Caption corpora arrive as one bracketed tree per sentence, the format
constituency parsers print.  This walks through parsing a tree,
traversing it, and the canonical serialization that makes tree files
diffable.
"""

from avstoolkit.treebank import (
    parse_bracketed,
    to_bracketed,
    walk_nodes,
    yield_tokens,
)

sentence = "(S (NP (DT a) (JJ young) (NN man)) (VP (VBZ sits) (PRT (RP down))))"
tree = parse_bracketed(sentence)

print("input:", sentence)
print("root label:", tree.root.label)
print("tokens in order:", yield_tokens(tree))

# Pre-order traversal visits a parent before its children.  Interior
# nodes carry constituent labels (S, NP, VP, ...), leaves carry the
# part-of-speech tag plus the surface token.
print("\npre-order walk:")
for node in walk_nodes(tree):
    if node.is_leaf:
        print(f"  leaf {node.label:4s} -> {node.token}")
    else:
        print(f"  node {node.label}")

# Serialization is canonical (single spaces), so parse -> print -> parse
# is the identity and two equal trees always produce equal bytes.
printed = to_bracketed(tree)
assert parse_bracketed(printed) == tree
print("\ncanonical form:", printed)

# Functional tags like NP-SBJ are stripped from interior labels, and
# -LRB-/-RRB- escapes in tokens decode to literal parentheses.
fancy = parse_bracketed("(NP-SBJ (NN ball) (-LRB- -LRB-) (NN red) (-RRB- -RRB-))")
print("\nstripped label:", fancy.root.label)
print("decoded tokens:", yield_tokens(fancy))
