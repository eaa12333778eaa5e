/* tslint:disable */
/* eslint-disable */

/**
 * Correlation traces; see [`traces`]. The last element is the crest factor.
 */
export function correlationTraces(length: number, bits: number, awgn_db: number, seed: number): Float64Array;

/**
 * Link budget; see [`budget`].
 */
export function linkBudget(ptx_max_dbm: number, s_max_dbm: number, snr_a_db: number, length: number, periods: number): Float64Array;

/**
 * Monte-Carlo PSR curve; see [`psr_curve`].
 */
export function psrCurve(length: number, bits: number, snr_a_db: number, snr_r_step: number, trials: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly correlationTraces: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly linkBudget: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly psrCurve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
