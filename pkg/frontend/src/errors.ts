export class RenderError extends Error {
  constructor(public readonly category: string, message: string) {
    super(message);
    this.name = "RenderError";
  }
}

export function schemaError(message: string): RenderError {
  return new RenderError("schema-error", message);
}

export function emptyInputError(message: string): RenderError {
  return new RenderError("empty-input", message);
}

export function usageError(message: string): RenderError {
  return new RenderError("usage", message);
}
