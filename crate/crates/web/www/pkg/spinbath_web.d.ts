/* tslint:disable */
/* eslint-disable */

/**
 * D_eff of the thermal initial state against detuning.
 */
export function deff_curve(n_ions: number, cutoff: number, omega1_mhz: number, rabi_mhz: number, eta1: number, nbar: Float64Array, omega_z_max_mhz: number, count: number): string;

/**
 * Axial normal modes of an `n_ions` chain with the spin on the first ion.
 */
export function normal_modes(n_ions: number, omega1_mhz: number, eta1: number): string;

/**
 * `<sigma_z(t)>` on a uniform grid up to `t_max_tau` spin periods.
 */
export function time_trace(n_ions: number, cutoff: number, omega1_mhz: number, rabi_mhz: number, omega_z_mhz: number, eta1: number, nbar: Float64Array, t_max_tau: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly deff_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly normal_modes: (a: number, b: number, c: number) => [number, number, number, number];
    readonly time_trace: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
