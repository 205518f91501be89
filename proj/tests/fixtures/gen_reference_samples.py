#!/usr/bin/env python3
"""Reference sampler for the world policy, written independently of the C++ code.

Reads a world file and prints, per question, the next-sentence draws from the
question node and the full completions for sample indices 0..7 at a few
temperatures. Output is the golden file checked by test_world.

    python3 gen_reference_samples.py world_b2_h05.json 42 > samples_b2_h05.json
"""
import json
import sys

MASK = (1 << 64) - 1
NEXT_SENTENCE, COMPLETION = 1, 2
END = "<|end|>"


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def mix(words):
    h = 0
    for w in words:
        h = splitmix64(h ^ (w & MASK))
    return h


def unit(x):
    return (x >> 11) * 2.0 ** -53


def draw(weights, u, temperature):
    if temperature == 0:
        best = max(weights)
        return weights.index(best)
    scaled = [float(w) ** (1.0 / temperature) for w in weights]
    total = 0.0
    for s in scaled:
        total += s
    target = u * total
    cum = 0.0
    for i, s in enumerate(scaled):
        cum += s
        if target < cum:
            return i
    return len(scaled) - 1


def pick(world_seed, run_seed, qi, node, sample, purpose, nodes, temperature):
    n = nodes[node]
    u = unit(splitmix64(mix([world_seed, run_seed, qi, node, sample, purpose])))
    return n["children"][draw(n["weights"], u, temperature)]


def main():
    world = json.load(open(sys.argv[1]))
    run_seed = int(sys.argv[2])
    seed = world["seed"]
    out = []
    for qi, q in enumerate(world["questions"]):
        nodes = {n["id"]: n for n in q["nodes"]}
        for temperature in (0.0, 0.9, 1.0):
            first, full = [], []
            for s in range(8):
                c = pick(seed, run_seed, qi, 0, s, NEXT_SENTENCE, nodes, temperature)
                first.append(nodes[c]["text"])
                cur, texts = 0, []
                while not nodes[cur]["terminal"] and nodes[cur]["children"]:
                    cur = pick(seed, run_seed, qi, cur, s, COMPLETION, nodes, temperature)
                    texts.append(nodes[cur]["text"])
                full.append(" ".join(texts))
            out.append({"question": q["question"], "temperature": temperature,
                        "next_sentence": first, "full_completion": full})
    json.dump({"run_seed": run_seed, "draws": out}, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
