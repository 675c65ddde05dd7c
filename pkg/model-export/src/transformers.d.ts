// Ambient declaration for the optional transformers.js dependency, so the
// package typechecks when the encoder backend is not installed.
declare module "@xenova/transformers" {
  export const env: {
    cacheDir?: string;
    localModelPath?: string;
    allowRemoteModels?: boolean;
    [key: string]: unknown;
  };
  export function pipeline(
    task: string,
    model?: string,
    options?: Record<string, unknown>,
  ): Promise<unknown>;
}
