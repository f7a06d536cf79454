/**
 * Pointer-chain regeneration.
 *
 * Chase buffers are described in launch metadata as {kind: "pointer_chain",
 * seed, elements} and rebuilt executor-side: a SplitMix64-driven Sattolo
 * shuffle producing one random Hamiltonian cycle. The algorithm is part of
 * the wire contract, so this must match the generator side bit for bit.
 */

const MASK64 = (1n << 64n) - 1n;

export function splitmix64(state: bigint): { value: bigint; state: bigint } {
  state = (state + 0x9e3779b97f4a7c15n) & MASK64;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return { value: (z ^ (z >> 31n)) & MASK64, state };
}

/** Cyclic permutation over n slots: following chain[i] visits every slot. */
export function pointerChain(nElements: number, seed: number | bigint): number[] {
  if (nElements < 1) throw new Error("pointer chain needs at least one element");
  const chain = Array.from({ length: nElements }, (_, i) => i);
  let state = BigInt(seed) & MASK64;
  for (let i = nElements - 1; i > 0; i--) {
    const step = splitmix64(state);
    state = step.state;
    const j = Number(step.value % BigInt(i));
    [chain[i], chain[j]] = [chain[j], chain[i]];
  }
  return chain;
}

/** Final slot index after `accesses` dependent loads from `start`. */
export function chaseWalk(chain: number[], accesses: number, start = 0): number {
  let idx = start;
  for (let i = 0; i < accesses; i++) idx = chain[idx];
  return idx;
}
