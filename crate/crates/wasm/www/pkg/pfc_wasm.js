/**
 * Interactive time-adaptive simulation of one scenario.
 */
export class Simulation {
    static __wrap(ptr) {
        const obj = Object.create(Simulation.prototype);
        obj.__wbg_ptr = ptr;
        SimulationFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        SimulationFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_simulation_free(ptr, 0);
    }
    /**
     * Advances up to `max_steps` with the energy-variation controller;
     * returns the number of steps taken.
     * @param {number} max_steps
     * @returns {number}
     */
    advance(max_steps) {
        const ret = wasm.simulation_advance(this.__wbg_ptr, max_steps);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return ret[0] >>> 0;
    }
    /**
     * @returns {number}
     */
    energy() {
        const ret = wasm.simulation_energy(this.__wbg_ptr);
        return ret;
    }
    /**
     * Flattened `(t, E)` pairs of the original-energy trace.
     * @returns {Float64Array}
     */
    energy_trace() {
        const ret = wasm.simulation_energy_trace(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Current field as RGBA bytes (row-major, `m x m`), normalized to the
     * frame's own range under a blue/white/orange diverging map.
     * @returns {Uint8Array}
     */
    field_rgba() {
        const ret = wasm.simulation_field_rgba(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {number}
     */
    m() {
        const ret = wasm.simulation_m(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    mass() {
        const ret = wasm.simulation_mass(this.__wbg_ptr);
        return ret;
    }
    /**
     * Supercooled-liquid phase transition from uniform noise.
     * @param {number} m
     * @param {number} length
     * @param {number} epsilon
     * @param {number} mean
     * @param {number} amplitude
     * @param {bigint} seed
     * @param {number} tau_max
     * @returns {Simulation}
     */
    static phase_transition(m, length, epsilon, mean, amplitude, seed, tau_max) {
        const ret = wasm.simulation_phase_transition(m, length, epsilon, mean, amplitude, seed, tau_max);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Simulation.__wrap(ret[0]);
    }
    /**
     * Three rotated crystallites growing into the supercooled background.
     * @param {number} m
     * @param {number} length
     * @param {number} epsilon
     * @param {number} tau_max
     * @returns {Simulation}
     */
    static polycrystal(m, length, epsilon, tau_max) {
        const ret = wasm.simulation_polycrystal(m, length, epsilon, tau_max);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Simulation.__wrap(ret[0]);
    }
    /**
     * @returns {number}
     */
    r_ratio() {
        const ret = wasm.simulation_r_ratio(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} tau_max
     */
    set_tau_max(tau_max) {
        wasm.simulation_set_tau_max(this.__wbg_ptr, tau_max);
    }
    /**
     * The smooth accuracy-test initial condition.
     * @param {number} m
     * @param {number} length
     * @param {number} epsilon
     * @param {number} tau_max
     * @returns {Simulation}
     */
    static smooth(m, length, epsilon, tau_max) {
        const ret = wasm.simulation_smooth(m, length, epsilon, tau_max);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Simulation.__wrap(ret[0]);
    }
    /**
     * @returns {number}
     */
    steps() {
        const ret = wasm.simulation_steps(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    t() {
        const ret = wasm.simulation_t(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    tau() {
        const ret = wasm.simulation_tau(this.__wbg_ptr);
        return ret;
    }
    /**
     * Flattened `(t, tau)` pairs of the committed step sizes.
     * @returns {Float64Array}
     */
    tau_trace() {
        const ret = wasm.simulation_tau_trace(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) Simulation.prototype[Symbol.dispose] = Simulation.prototype.free;

/**
 * Linear growth rate of a perturbation mode about the constant state
 * `phi_bar`: `lambda(kappa) = -kappa^2 ((beta - kappa^2)^2 + 3 phi_bar^2 - eps)`.
 * Positive values mark the pattern-forming band.
 * @param {number} beta
 * @param {number} epsilon
 * @param {number} phi_bar
 * @param {number} kappa_max
 * @param {number} samples
 * @returns {Float64Array}
 */
export function growth_rate_curve(beta, epsilon, phi_bar, kappa_max, samples) {
    const ret = wasm.growth_rate_curve(beta, epsilon, phi_bar, kappa_max, samples);
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * Stability-limit curve: flattened `(sigma, gamma**(sigma))` pairs over
 * `sigma` in `[0.51, 1]`. The root diverges toward `sigma = 1/2`.
 * @param {number} samples
 * @returns {Float64Array}
 */
export function stability_root_curve(samples) {
    const ret = wasm.stability_root_curve(samples);
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg___wbindgen_throw_bb96b2010945f0bc: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_cast_0000000000000001: function(arg0, arg1) {
            // Cast intrinsic for `Ref(String) -> Externref`.
            const ret = getStringFromWasm0(arg0, arg1);
            return ret;
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./pfc_wasm_bg.js": import0,
    };
}

const SimulationFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_simulation_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('pfc_wasm_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
