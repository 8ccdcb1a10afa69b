/** @file Error types raised by the bindings. */

/** Malformed file contents or an invalid value crossing the boundary. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

/** The engine process failed; the message carries its stderr text. */
export class EngineError extends Error {
  readonly exitCode: number | null;
  readonly stderr: string;

  constructor(message: string, exitCode: number | null, stderr: string) {
    super(message);
    this.name = "EngineError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

/** Degenerate landmark geometry: the spline system is singular (exit 3). */
export class GeometryError extends EngineError {
  constructor(message: string, stderr: string) {
    super(message, 3, stderr);
    this.name = "GeometryError";
  }
}
