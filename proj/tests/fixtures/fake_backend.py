#!/usr/bin/env python3
# Copyright 2026 The sosbias Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Deterministic stand-in for tools/hf_backend.py used by the tests.

Tokens are lowercase whitespace words. The hidden state of position i is
(len(token_i), i, 1) with a masked position reading (0, i, 1). The head
returns -(1 + |h|_1) / 10 for every target, so log-probabilities are exact
and easy to predict. Flags: --fail-on OP replies with an error for OP;
--die-after N exits after N replies.
"""

import argparse
import json
import sys


def hidden(tokens, masked):
    return [[0.0 if i == masked else float(len(t)), float(i), 1.0] for i, t in enumerate(tokens)]


def head(h):
    return -(1.0 + sum(abs(x) for x in h)) / 10.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fail-on", default="")
    ap.add_argument("--die-after", type=int, default=-1)
    args = ap.parse_args()
    served = 0
    for line in sys.stdin:
        if served == args.die_after:
            return 0
        req = json.loads(line)
        op = req["op"]
        if op == args.fail_on:
            reply = {"error": "forced failure"}
        elif op == "info":
            reply = {"model_id": "fake-process", "hidden_size": 3}
        elif op == "tokenize":
            reply = {"tokens": req["text"].lower().split()}
        elif op == "log_prob":
            m = req["masked"]
            reply = {"log_prob": head(hidden(req["tokens"], m)[m])}
        elif op == "hidden":
            reply = {"hidden": hidden(req["tokens"], req.get("masked"))}
        elif op == "hidden_at":
            m = req["masked"]
            reply = {"hidden": hidden(req["tokens"], m)[m]}
        elif op == "head":
            reply = {"log_prob": head(req["hidden"])}
        else:
            reply = {"error": "unknown op"}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
        served += 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
