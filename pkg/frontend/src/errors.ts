/**
 * Error taxonomy mirroring the condkit CLI. Failures that cross the process
 * boundary keep their upstream class names (NotInfilled, InvalidScene, ...)
 * so callers can dispatch on `err.name` or `instanceof` the same way Python
 * callers dispatch on exception classes.
 */

export class CondkitError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class IoFailure extends CondkitError {}
export class ChecksumMismatch extends IoFailure {}
export class InvalidScene extends CondkitError {}
export class NotInfilled extends CondkitError {}
export class ConfigError extends CondkitError {}
export class ExternalUnavailable extends CondkitError {}
export class GuidanceFailure extends CondkitError {}
export class ParseFailure extends CondkitError {}
export class TooSmall extends CondkitError {}

/** Python builtin exception names the CLI can surface, preserved verbatim. */
export class IndexError extends CondkitError {}
export class ValueError extends CondkitError {}
export class KeyError extends CondkitError {}

/** Operation on a SceneHandle after close(). */
export class HandleClosed extends CondkitError {}

/** CLI exited nonzero without a recognizable `condkit error:` line. */
export class CliFailure extends CondkitError {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, exitCode: number | null, stderr: string) {
    super(message);
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

const BY_NAME: Record<string, new (message: string) => CondkitError> = {
  CondkitError,
  IoFailure,
  ChecksumMismatch,
  InvalidScene,
  NotInfilled,
  ConfigError,
  ExternalUnavailable,
  GuidanceFailure,
  ParseFailure,
  TooSmall,
  IndexError,
  ValueError,
  KeyError,
};

/** Translate a `condkit error: <ClassName>: <message>` line into a throwable. */
export function errorFromCli(
  className: string,
  message: string,
  exitCode: number | null,
  stderr: string,
): CondkitError {
  const cls = BY_NAME[className];
  if (cls !== undefined) {
    return new cls(message);
  }
  const err = new CliFailure(message, exitCode, stderr);
  err.name = className; // unmapped upstream class: keep its name anyway
  return err;
}
