/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const compare_filters: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
export const graph_spectrum: (a: number, b: number, c: bigint, d: number) => [number, number];
export const loss_curves: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
