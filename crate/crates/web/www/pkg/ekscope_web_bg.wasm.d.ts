/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const alphaFromZ: (a: number) => number;
export const intervals: (a: number, b: number) => [number, number];
export const widthCurve: (a: number, b: number) => [number, number];
export const windowCoverage: (a: number, b: number, c: number, d: number) => [number, number];
export const zFromAlpha: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
