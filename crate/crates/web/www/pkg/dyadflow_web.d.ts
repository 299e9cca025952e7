/* tslint:disable */
/* eslint-disable */

export class FlowDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Density on an `n x n` grid over `[-extent, extent]^2`, row-major with
     * `y` decreasing down the rows (image order).
     */
    density(n: number, extent: number, c: number): Float64Array;
    constructor(seed: bigint);
    /**
     * `n` samples at temperature `sigma`, interleaved as `x0, y0, x1, ...`.
     */
    sample(n: number, sigma: number, c: number, seed: bigint): Float64Array;
    /**
     * Runs `steps` Adam updates on fresh batches with `c = ±1` and returns
     * the mean NLL of the last batch.
     */
    train(steps: number): number;
    readonly steps_trained: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_flowdemo_free: (a: number, b: number) => void;
    readonly flowdemo_density: (a: number, b: number, c: number, d: number) => [number, number];
    readonly flowdemo_new: (a: bigint) => number;
    readonly flowdemo_sample: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
    readonly flowdemo_steps_trained: (a: number) => number;
    readonly flowdemo_train: (a: number, b: number) => number;
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
