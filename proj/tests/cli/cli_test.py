#!/usr/bin/env python3
"""End-to-end checks of the topoinc command line."""

import argparse
import filecmp
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

SVG_NS = "{http://www.w3.org/2000/svg}"


class Failure(Exception):
    pass


def check(cond, msg):
    if not cond:
        raise Failure(msg)


class Cli:
    def __init__(self, binary, work):
        self.binary = binary
        self.work = work
        # Defaults must not leak in from the caller's environment.
        self.env = {k: v for k, v in os.environ.items() if not k.startswith("TOPOINC_")}

    def run(self, *args, env=None, expect=0):
        e = dict(self.env)
        e.update(env or {})
        p = subprocess.run([self.binary, *args], cwd=self.work, env=e,
                           capture_output=True, text=True)
        if p.returncode != expect:
            raise Failure(f"{' '.join(args)}: exit {p.returncode}, expected {expect}\n"
                          f"stdout: {p.stdout[-2000:]}\nstderr: {p.stderr[-2000:]}")
        return p

    def path(self, name):
        return os.path.join(self.work, name)


def rows(path):
    with open(path) as f:
        return f.read().splitlines()


def series_groups(path):
    root = ET.parse(path).getroot()
    check(root.tag == SVG_NS + "svg", f"{path}: root is not <svg>")
    groups = [g for g in root.iter(SVG_NS + "g") if g.get("class") == "series"]
    check(len(groups) == int(root.get("data-series-count")),
          f"{path}: {len(groups)} series groups, declared {root.get('data-series-count')}")
    return root, groups


def case_help(cli, golden, command):
    args = ["--help"] if command == "topoinc" else [command, "--help"]
    out = cli.run(*args).stdout
    with open(os.path.join(golden, f"help_{command}.txt")) as f:
        want = f.read()
    check(out == want, f"--help for {command} differs from the golden file:\n{out}")


def case_gen(cli):
    cli.run("gen", "--dataset", "two-moons", "--n-per-class", "1000", "--sigma", "0.05",
            "--seed", "42", "--out", "a.csv")
    cli.run("gen", "--dataset", "two-moons", "--n-per-class", "1000", "--sigma", "0.05",
            "--seed", "42", "--out", "b.csv")
    check(filecmp.cmp(cli.path("a.csv"), cli.path("b.csv"), shallow=False),
          "gen output differs between identical runs")
    check(filecmp.cmp(cli.path("a.json"), cli.path("b.json"), shallow=False),
          "gen sidecar differs between identical runs")
    lines = rows(cli.path("a.csv"))
    check(lines[0] == "x1,x2,label,u", f"bad header {lines[0]}")
    check(len(lines) == 2001, f"{len(lines) - 1} rows, expected 2000")
    labels = [int(r.split(",")[2]) for r in lines[1:]]
    check(labels.count(0) == 1000 and labels.count(1) == 1000, "unbalanced classes")
    side = json.load(open(cli.path("a.json")))
    check(side["rows"] == 2000 and side["seed"] == 42, "sidecar metadata")
    xs = [float(r.split(",")[0]) for r in lines[1:]]
    mean = sum(xs) / len(xs)
    check(abs(side["standardizer"]["mean"][0] - mean) < 1e-12, "standardizer mean")

    # Zero noise puts the points on the curves: ideal INC moves them by ~0.
    cli.run("gen", "--dataset", "spirals", "--n-per-class", "1", "--sigma", "0", "--seed", "0",
            "--out", "s.csv")
    check(len(rows(cli.path("s.csv"))) == 4, "spirals (1, 0, 0) should give 3 rows")
    cli.run("inc", "--variant", "ideal", "--dataset", "spirals", "--queries", "s.csv",
            "--out", "s_inc.json")
    for r in json.load(open(cli.path("s_inc.json")))["results"]:
        check(r["objective"] < 1e-9, f"noise-free point off its curve by {r['objective']}")


def case_errors(cli):
    cli.run("gen", "--no-such-flag", expect=2)
    cli.run("train", "--dataset", "segments", expect=2)
    cli.run("train", "--dataset", "segments", "--latent-components", "2", "--class-aware",
            "maybe", expect=2)
    cli.run("inc", "--model", "m.json", "--query", "0,x", expect=2)
    cli.run(expect=2)
    p = cli.run("gen", "--dataset", "three-moons", "--out", "x.csv", expect=1)
    err = json.loads(p.stderr.strip().splitlines()[-1])
    check(err["error"]["code"] == "unknown-dataset", f"error code {err}")
    p = cli.run("levelset", "--model", "missing.json", expect=1)
    err = json.loads(p.stderr.strip().splitlines()[-1])
    check(err["error"]["code"] == "io-error", f"error code {err}")
    p = cli.run("levelset", "--dataset", "segments", "--sigma", "0.05", "--lambda", "100",
                "--grid", "10", expect=1)
    err = json.loads(p.stderr.strip().splitlines()[-1])
    check(err["error"]["code"] == "empty-superlevel-set", f"error code {err}")


def case_env(cli):
    cli.run("gen", "--out", "e.csv", env={"TOPOINC_N_PER_CLASS": "5",
                                          "TOPOINC_DATASET": "circles"})
    side = json.load(open(cli.path("e.json")))
    check(side["dataset"] == "circles" and side["rows"] == 10, f"env override ignored: {side}")
    # An explicit flag beats the environment.
    cli.run("gen", "--out", "e.csv", "--n-per-class", "3", env={"TOPOINC_N_PER_CLASS": "5"})
    check(json.load(open(cli.path("e.json")))["rows"] == 6, "flag should beat env")


def case_train(cli, roundtrip):
    args = ["train", "--dataset", "segments", "--latent-components", "2", "--class-aware",
            "true", "--iters", "2000", "--seed", "7"]
    cli.run(*args, "--out", "m.json", "--manifest", "m_manifest.json")
    cli.run(*args, "--out", "m2.json", "--workers", "2")
    check(filecmp.cmp(cli.path("m.json"), cli.path("m2.json"), shallow=False),
          "training is not reproducible")
    p = subprocess.run([roundtrip, cli.path("m.json"), cli.path("m3.json")],
                       capture_output=True, text=True)
    check(p.returncode == 0, f"round trip failed: {p.stderr}")
    check(filecmp.cmp(cli.path("m.json"), cli.path("m3.json"), shallow=False),
          "re-saved checkpoint differs")
    m = json.load(open(cli.path("m.json")))
    check(m["metadata"]["seed"] == 7 and m["metadata"]["class_aware"], "metadata")
    man = json.load(open(cli.path("m_manifest.json")))
    check(man["seed"] == 7 and man["artifacts"][0]["path"] == "m.json", f"manifest {man}")
    check("version" in man and "modules" in man, "manifest lacks versions")


def case_levelset(cli):
    cli.run("levelset", "--model", "m.json", "--lambda", "0.01", "--grid", "300",
            "--field-out", "f.csv", "--report-out", "r.json")
    lines = rows(cli.path("f.csv"))
    check(lines[0].startswith("# domain"), "field header")
    values = [v for r in lines[1:] for v in r.split(",")]
    check(len(values) == 90000, f"{len(values)} field values")
    rep = json.load(open(cli.path("r.json")))
    for key in ["n_components", "n_holes", "includes_manifold", "separates_classes", "seed",
                "version"]:
        check(key in rep, f"report lacks {key}")

    cli.run("levelset", "--dataset", "segments", "--grid", "120", "--field-out", "fx.csv",
            "--report-out", "rx.json")
    rep = json.load(open(cli.path("rx.json")))
    check(rep["n_components"] == 2 and rep["includes_manifold"] and rep["separates_classes"],
          f"exact segments field: {rep}")
    check(rep["threshold"]["precondition_holds"], "segments precondition")


def case_plot(cli):
    cli.run("plot", "--kind", "levelset-outline", "--field", "f.csv", "--lambda", "0.01",
            "--out", "outline.svg")
    root, groups = series_groups(cli.path("outline.svg"))
    check(len(groups) == 1, "outline should be one series")
    check(root.get("viewBox") == "-3 -3 6 6", f"viewBox {root.get('viewBox')}")
    check(len(groups[0].findall(SVG_NS + "path")) == 1, "outline path")

    cli.run("plot", "--kind", "scatter", "--samples", "a.csv", "--out", "scatter.svg")
    cli.run("plot", "--kind", "scatter", "--samples", "a.csv", "--out", "scatter2.svg")
    check(filecmp.cmp(cli.path("scatter.svg"), cli.path("scatter2.svg"), shallow=False),
          "plot is not deterministic")
    _, groups = series_groups(cli.path("scatter.svg"))
    check([g.get("fill") for g in groups] == ["red", "blue"], "class colors")
    check(all(len(g.findall(SVG_NS + "circle")) == 1000 for g in groups), "markers per class")

    cli.run("plot", "--kind", "field-heatmap", "--field", "fx.csv", "--samples", "s.csv",
            "--out", "heat.svg")
    _, groups = series_groups(cli.path("heat.svg"))
    check(len(groups) == 4, "heatmap plus three spiral classes")
    check([g.get("fill") for g in groups[1:]] == ["red", "blue", "green"], "class colors")

    cli.run("inc", "--model", "m.json", "--variant", "aware", "--query", "0.1,0.9",
            "--trace-out", "t.csv", "--out", "t.json")
    check(len(rows(cli.path("t.csv"))) == 102, "trace rows")
    cli.run("plot", "--kind", "trace", "--trace", "t.csv", "--out", "trace.svg")
    _, groups = series_groups(cli.path("trace.svg"))
    check(len(groups) == 1 and groups[0].find(SVG_NS + "polyline") is not None, "trace")

    p = cli.run("boundary", "--dataset", "segments", "--model-aware", "m.json", "--grid", "24",
                "--n-per-class", "200")
    check(p.stderr == "", "no warning at small grids")
    summary = json.load(open(cli.path("boundary_summary.json")))
    check(set(summary["agreement_with_ideal"]) == {"none", "ideal", "aware"}, "defenses")
    check(summary["agreement_with_ideal"]["ideal"] == 1.0, "ideal agrees with itself")
    cli.run("plot", "--kind", "boundary", "--boundary", "boundary_ideal.csv", "--out", "b.svg")
    _, groups = series_groups(cli.path("b.svg"))
    check([g.get("data-series") for g in groups] == ["class-0", "class-1"], "boundary series")

    cli.run("plot", "--kind", "trace", "--out", "x.svg", expect=2)
    cli.run("plot", "--kind", "pie", "--out", "x.svg", expect=2)
    cli.run("plot", "--kind", "scatter", "--samples", "nope.csv", "--out", "x.svg", expect=1)


def case_bench(cli):
    cli.run("bench", "--experiment", "threshold", "--dataset", "segments", "--out", "bt.json")
    rep = json.load(open(cli.path("bt.json")))
    check(rep["precondition_holds"] and rep["floor_holds"] and rep["ceiling_holds"],
          f"segments threshold report {rep}")
    with open(cli.path("cfg.json"), "w") as f:
        json.dump({"dataset": "circles", "seed": 3}, f)
    cli.run("bench", "--experiment", "threshold", "--config", "cfg.json", "--out", "bc.json")
    rep = json.load(open(cli.path("bc.json")))
    check(rep["config"]["dataset"] == "circles" and rep["seed"] == 3, "config file ignored")
    cli.run("bench", "--experiment", "threshold", "--config", "cfg.json", "--seed", "5",
            "--out", "bc.json")
    check(json.load(open(cli.path("bc.json")))["seed"] == 5, "flag should override config")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bin", required=True)
    ap.add_argument("--roundtrip", required=True)
    ap.add_argument("--golden", required=True)
    ap.add_argument("--work", required=True)
    ap.add_argument("case")
    a = ap.parse_args()
    os.makedirs(a.work, exist_ok=True)
    cli = Cli(os.path.abspath(a.bin), a.work)
    try:
        if a.case.startswith("help_"):
            case_help(cli, a.golden, a.case[len("help_"):])
        elif a.case == "train":
            case_train(cli, a.roundtrip)
        else:
            globals()["case_" + a.case](cli)
    except Failure as e:
        print(f"FAIL {a.case}: {e}")
        return 1
    print(f"ok {a.case}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
