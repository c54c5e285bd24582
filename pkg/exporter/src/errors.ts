export class ToolMissing extends Error {
  constructor(command: string, cause?: unknown) {
    super(`external tool not available: ${command}`);
    this.name = "ToolMissing";
    if (cause !== undefined) (this as { cause?: unknown }).cause = cause;
  }
}

export class SchemaValidationFailed extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaValidationFailed";
  }
}
