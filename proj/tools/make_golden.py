#!/usr/bin/env python3
"""Extract the regression fields of a report.json into a golden file.

usage: make_golden.py report.json golden.json
"""
import json
import sys

POINTERS = [
    "/passed",
    "/flow/terminal",
    "/flow/snapshots",
    "/flow/steps",
    "/flow/regrids",
    "/flow/singular_time",
    "/flow/terminal_time",
    "/flow/observed_extinction_time",
    "/flow/reference_extinction_time",
    "/flow/initial_class/in_class",
    "/flow/initial_class/V_measured",
    "/flow/initial_class/Theta_measured",
    "/estimates/preservation/status",
    "/estimates/preservation/max_relative",
    "/estimates/decay/status",
    "/estimates/decay/worst_quotient",
    "/estimates/gradient/status",
    "/estimates/gradient/crude_sup",
    "/estimates/gradient/A2_growth",
    "/estimates/hessian/sup",
    "/estimates/kato/status",
    "/estimates/kato/margin",
    "/estimates/time_bound/status",
    "/estimates/time_bound/lhs",
    "/estimates/time_bound/rhs",
    "/blowup/type",
    "/blowup/T",
    "/blowup/functional_sup",
    "/blowup/best_k",
    "/certificate/gamma_hat",
    "/certificate/feasible",
    "/multiplicity/pass",
]


def lookup(doc, pointer):
    node = doc
    for part in pointer.lstrip("/").split("/"):
        if isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return None, False
    return node, True


def main():
    report = json.load(open(sys.argv[1]))
    golden = {}
    for p in POINTERS:
        value, found = lookup(report, p)
        if found and not isinstance(value, (dict, list)):
            golden[p] = value
    golden["/assertions"] = [[a["name"], a["passed"]] for a in report["assertions"]]
    with open(sys.argv[2], "w") as f:
        json.dump(golden, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
