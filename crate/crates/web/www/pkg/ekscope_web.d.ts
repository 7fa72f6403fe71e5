/* tslint:disable */
/* eslint-disable */

/**
 * α for a given z, for display next to the slider.
 */
export function alphaFromZ(z: number): number;

/**
 * Bounds of every untrained estimator at `ell2`, level given by z.
 */
export function intervals(ell2: number, z: number): string;

/**
 * Box-Cox width over λ ∈ [0.05, 2] and its minimizer.
 */
export function widthCurve(ell2: number, z: number): string;

/**
 * Sieves `[m − j, m + j]` and reports Box-Cox coverage there. `m` arrives as
 * an f64 from JavaScript and must be an exact integer.
 */
export function windowCoverage(m: number, j: number, lambda: number, z: number): string;

/**
 * z for a given α.
 */
export function zFromAlpha(alpha: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly alphaFromZ: (a: number) => number;
    readonly intervals: (a: number, b: number) => [number, number];
    readonly widthCurve: (a: number, b: number) => [number, number];
    readonly windowCoverage: (a: number, b: number, c: number, d: number) => [number, number];
    readonly zFromAlpha: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
