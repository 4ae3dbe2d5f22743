import { spawnSync } from "node:child_process";

import { CliFailure, ExternalUnavailable, errorFromCli } from "./errors.js";

export interface RunOptions {
  /** Interpreter used to spawn the CLI (default "python3"). */
  python?: string;
}

const ERROR_LINE = /^condkit error: ([A-Za-z_][A-Za-z0-9_]*): (.*)$/;

/** Run a condkit subcommand, returning stdout or throwing a translated error. */
export function runCondkit(args: string[], options: RunOptions = {}): string {
  const python = options.python ?? "python3";
  const result = spawnSync(python, ["-m", "condkit", ...args], {
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (result.error !== undefined) {
    throw new ExternalUnavailable(`failed to spawn ${python}: ${result.error.message}`);
  }
  if (result.status === 0) {
    return result.stdout;
  }
  const stderr = result.stderr ?? "";
  const lines = stderr.trimEnd().split("\n");
  for (let k = lines.length - 1; k >= 0; k--) {
    const match = ERROR_LINE.exec(lines[k]!);
    if (match !== null) {
      throw errorFromCli(match[1]!, match[2]!, result.status, stderr);
    }
  }
  const reason = result.signal !== null ? `killed by ${result.signal}` : `exit code ${result.status}`;
  throw new CliFailure(`condkit ${args[0] ?? ""} failed (${reason})`, result.status, stderr);
}
