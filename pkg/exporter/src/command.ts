import { spawnSync } from "node:child_process";

/**
 * External tools are plain commands.  Batch tools read one input line
 * per record on stdin and must answer with exactly one output line per
 * record; per-frame tools are invoked once per output file with
 * placeholder substitution.  A command that cannot be spawned or exits
 * nonzero is "unreachable": the caller aborts without finalizing.
 */
export class CommandUnreachable extends Error {}

export function runBatchCommand(command: string[], inputLines: string[]): string[] {
  const result = spawnSync(command[0], command.slice(1), {
    input: inputLines.join("\n") + (inputLines.length ? "\n" : ""),
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new CommandUnreachable(`${command[0]}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new CommandUnreachable(
      `${command[0]} exited with ${result.status}: ${result.stderr ?? ""}`,
    );
  }
  const lines = result.stdout.split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (lines.length !== inputLines.length) {
    throw new CommandUnreachable(
      `${command[0]}: sent ${inputLines.length} records, got ${lines.length} lines back`,
    );
  }
  return lines;
}

export function runFileCommand(command: string[]): void {
  const result = spawnSync(command[0], command.slice(1), { encoding: "utf-8" });
  if (result.error) {
    throw new CommandUnreachable(`${command[0]}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new Error(`${command[0]} exited with ${result.status}`);
  }
}

export function substitute(
  template: string[],
  vars: Record<string, string>,
): string[] {
  return template.map((arg) =>
    arg.replace(/\{(\w+)\}/g, (whole, name: string) => {
      const value = vars[name];
      if (value === undefined) {
        throw new Error(`unknown placeholder {${name}} in command template`);
      }
      return value;
    }),
  );
}
