import { IoFailure } from "./errors.js";

export interface TarMember {
  name: string;
  data: Buffer;
}

const BLOCK = 512;

function octal(field: Buffer, what: string): number {
  const text = field.toString("ascii").replace(/\0[^]*$/, "").trim();
  if (text === "") {
    return 0;
  }
  const value = Number.parseInt(text, 8);
  if (Number.isNaN(value) || value < 0) {
    throw new IoFailure(`bad ${what} field in tar header: ${JSON.stringify(text)}`);
  }
  return value;
}

// header checksum is the byte sum with the checksum field itself read as spaces
function checksumOk(header: Buffer): boolean {
  let sum = 0;
  for (let k = 0; k < BLOCK; k++) {
    sum += k >= 148 && k < 156 ? 0x20 : header[k]!;
  }
  return sum === octal(header.subarray(148, 156), "checksum");
}

function cstring(field: Buffer): string {
  return field.toString("utf8").replace(/\0[^]*$/, "");
}

/** Parse an uncompressed ustar archive into its regular-file members. */
export function readTar(archive: Buffer): TarMember[] {
  const members: TarMember[] = [];
  let offset = 0;
  while (offset + BLOCK <= archive.length) {
    const header = archive.subarray(offset, offset + BLOCK);
    if (header.every((b) => b === 0)) {
      break; // end-of-archive marker
    }
    if (!checksumOk(header)) {
      throw new IoFailure(`bad tar header checksum at offset ${offset}`);
    }
    let name = cstring(header.subarray(0, 100));
    const magic = header.subarray(257, 262).toString("ascii");
    if (magic === "ustar") {
      const prefix = cstring(header.subarray(345, 500));
      if (prefix !== "") {
        name = `${prefix}/${name}`;
      }
    }
    const size = octal(header.subarray(124, 136), "size");
    const typeflag = header[156]!;
    offset += BLOCK;
    if (offset + size > archive.length) {
      throw new IoFailure(`truncated tar member ${name}`);
    }
    if (typeflag === 0x30 || typeflag === 0) {
      // '0' or NUL marks a regular file; copy so members outlive the archive buffer
      members.push({ name, data: Buffer.from(archive.subarray(offset, offset + size)) });
    }
    offset += Math.ceil(size / BLOCK) * BLOCK;
  }
  return members;
}
