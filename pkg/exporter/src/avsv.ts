import * as fs from "node:fs";

/**
 * Writer for the toolkit's dense-store binary: magic "AVSV", u16
 * version 1, u32 dimension, u64 record count, then per record a u32
 * id-byte-length, the UTF-8 id, and dim little-endian float32 values.
 */
export function writeAvsv(
  path: string,
  records: Array<{ id: string; values: number[] }>,
  dim: number,
): void {
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(4 + 2 + 4 + 8);
  header.write("AVSV", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt32LE(dim, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);
  chunks.push(header);
  for (const record of records) {
    if (record.values.length !== dim) {
      throw new Error(
        `record ${record.id}: expected ${dim} values, got ${record.values.length}`,
      );
    }
    const idBytes = Buffer.from(record.id, "utf-8");
    const lenBuf = Buffer.alloc(4);
    lenBuf.writeUInt32LE(idBytes.length, 0);
    const valueBuf = Buffer.alloc(4 * dim);
    for (let i = 0; i < dim; i++) {
      const v = record.values[i];
      if (!Number.isFinite(v)) {
        throw new Error(`record ${record.id}: non-finite value at ${i}`);
      }
      valueBuf.writeFloatLE(v, 4 * i);
    }
    chunks.push(lenBuf, idBytes, valueBuf);
  }
  const tmp = `${path}.tmp`;
  fs.writeFileSync(tmp, Buffer.concat(chunks));
  fs.renameSync(tmp, path);
}
