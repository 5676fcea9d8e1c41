/* tslint:disable */
/* eslint-disable */

/**
 * Open-loop oscillator run. `params` is a JSON object with `tau1`, `tau2`,
 * `beta`, `gamma`, `alpha` and `c`.
 */
export function oscillate(params: string, duration: number): string;

/**
 * Harmony search over the gait genome with `ni` improvisations.
 */
export function search(seed: bigint, ni: number): string;

/**
 * Rolls out a genome given as JSON and returns the per-tick trace.
 */
export function walk(genome: string, noise_std: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly oscillate: (a: number, b: number, c: number) => [number, number, number, number];
    readonly search: (a: bigint, b: number) => [number, number, number, number];
    readonly walk: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
