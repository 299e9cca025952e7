/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_flowdemo_free: (a: number, b: number) => void;
export const flowdemo_density: (a: number, b: number, c: number, d: number) => [number, number];
export const flowdemo_new: (a: bigint) => number;
export const flowdemo_sample: (a: number, b: number, c: number, d: number, e: bigint) => [number, number];
export const flowdemo_steps_trained: (a: number) => number;
export const flowdemo_train: (a: number, b: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
