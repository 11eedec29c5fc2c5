#!/usr/bin/env python3
"""Regenerates the synthetic fixture corpus under corpus/.

Graphs are random but seeded, shaped like LDC AMR 3.0 blocks. Each entry is built around a
spine of nested nodes so its depth is known by construction (written to
expected_depths.tsv); side branches, reentrant references, inverse edges and constants are
added without exceeding it.

    python3 generate.py
"""

import random
from pathlib import Path

SUBSETS = {
    "bolt": "bolt12_{a}_{b}.{n}",
    "consensus": "nw.wsj_{a}.{n}",
    "dfa": "DF-{a}-{b}-{c}.{n}",
    "lorelei": "lorelei_{a}_{b}.{n}",
    "proxy": "PROXY_AFP_ENG_{a}{b}.{n}",
    "xinhua": "nw.xin_{a}.{n}",
}

PREDICATES = ["want-01", "go-02", "say-01", "see-01", "make-01", "cause-01", "accelerate-01",
              "report-01", "help-01", "need-01", "attack-01", "protect-01", "believe-01",
              "develop-02", "increase-01", "affect-01", "announce-01", "support-01"]
NOUNS = ["boy", "girl", "government", "country", "city", "speed", "area", "world", "person",
         "organization", "disaster", "mission", "college", "market", "river", "policy",
         "report", "official", "economy", "region", "village", "storm", "company"]
CORE = [":ARG0", ":ARG1", ":ARG2"]
NON_CORE = [":mod", ":location", ":time", ":manner", ":purpose", ":source", ":part-of",
            ":consist-of", ":topic", ":beneficiary"]
NAMES = ["Africa", "Kenya", "Xinhua", "Reuters", "Sub-Saharan", "Beijing", "Nile", "Paris"]


class Builder:
    def __init__(self, rng):
        self.rng = rng
        self.used = {}
        self.declared = []

    def var(self, concept):
        head = concept[0]
        n = self.used.get(head, 0) + 1
        self.used[head] = n
        v = head if n == 1 else f"{head}{n}"
        self.declared.append(v)
        return v

    def concept(self):
        pool = PREDICATES if self.rng.random() < 0.5 else NOUNS
        return self.rng.choice(pool)

    def relation(self, concept):
        rng = self.rng
        if concept[-3:-2] == "-" and rng.random() < 0.6:
            return rng.choice(CORE)
        if rng.random() < 0.15:
            return rng.choice(CORE) + "-of"
        return rng.choice(NON_CORE)

    def attribute(self):
        rng = self.rng
        kind = rng.randrange(4)
        if kind == 0:
            return ":polarity", "-"
        if kind == 1:
            return ":quant", str(rng.randrange(1, 500))
        if kind == 2:
            return ":wiki", f'"{rng.choice(NAMES)}"'
        return ":op1", f'"{rng.choice(NAMES)}"'

    def node(self, budget, spine, indent):
        """Penman text for a node with exactly `budget` levels below it when `spine`."""
        concept = self.concept()
        v = self.var(concept)
        lines = [f"({v} / {concept}"]
        children = []
        if budget > 0:
            if spine:
                if budget == 1 and self.rng.random() < 0.3:
                    children.append(" ".join(self.attribute()))
                else:
                    children.append(f"{self.relation(concept)} {self.node(budget - 1, True, indent + 1)}")
            for _ in range(self.rng.randrange(0, 3 if budget > 2 else 2)):
                r = self.rng.random()
                if r < 0.25:
                    children.append(" ".join(self.attribute()))
                elif r < 0.4 and len(self.declared) > 1:
                    target = self.rng.choice(self.declared[:-1])
                    children.append(f"{self.rng.choice(CORE)} {target}")
                else:
                    sub = self.rng.randrange(0, budget)
                    children.append(f"{self.relation(concept)} {self.node(sub, False, indent + 1)}")
            self.rng.shuffle(children)
        pad = "      " * (indent + 1)
        text = lines[0]
        for c in children:
            text += f"\n{pad}{c}"
        return text + ")"


def sentence(rng, n_words):
    words = [rng.choice(NOUNS + ["the", "of", "and", "will", "in", "to"]) for _ in range(n_words)]
    return " ".join(words).capitalize() + " ."


def main():
    rng = random.Random(20200202)
    out = Path(__file__).parent / "corpus"
    out.mkdir(exist_ok=True)
    depths = list(range(13))
    expected = []
    for s_index, (subset, id_pattern) in enumerate(SUBSETS.items()):
        blocks = ["# AMR release (synthetic fixture); subset " + subset]
        for k in range(11):
            depth = depths[(s_index * 5 + k) % len(depths)]
            a, b, c = rng.randrange(1000, 9999), rng.randrange(100, 999), rng.randrange(10, 99)
            entry_id = id_pattern.format(a=a, b=b, c=c, n=k + 1)
            graph = Builder(rng).node(depth, True, 0)
            header = (
                f"# ::id {entry_id} ::date 2020-02-02T00:00:00 ::annotator synthetic ::preferred\n"
                f"# ::snt {sentence(rng, 4 + depth)}\n"
                f"# ::save-date Sun Feb 2, 2020 ::file {entry_id.replace('.', '_')}.txt"
            )
            blocks.append(f"{header}\n{graph}")
            expected.append(f"{entry_id}\t{subset}\t{depth}")
        path = out / f"amr-fixture-test-{subset}.txt"
        path.write_text("\n\n".join(blocks) + "\n")
    # Depth each graph was built to; an oracle for the depth computation.
    (Path(__file__).parent / "expected_depths.tsv").write_text("\n".join(expected) + "\n")


if __name__ == "__main__":
    main()
