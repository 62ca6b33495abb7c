/* tslint:disable */
/* eslint-disable */

/**
 * Small Monte Carlo comparison of every filter on one noise scenario.
 */
export function compare_filters(scenario: string, trials: number, steps: number, seed: bigint): string;

/**
 * Random graph, its Laplacian spectrum and the graph Fourier transform of a
 * test signal that is smooth on the graph plus `roughness` times the
 * highest-frequency eigenvector.
 */
export function graph_spectrum(n: number, p: number, seed: bigint, roughness: number): string;

/**
 * Loss value and normalised IRLS weight on `points` residuals in `[-range, range]`.
 */
export function loss_curves(beta: number, gamma: number, sigma: number, range: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_filters: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
    readonly graph_spectrum: (a: number, b: number, c: bigint, d: number) => [number, number];
    readonly loss_curves: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
