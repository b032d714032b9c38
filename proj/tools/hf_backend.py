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
"""Serves a Hugging Face masked LM over the sosbias JSON-lines protocol.

Usage: sosbias score --backend process \
           --backend-cmd "python3 tools/hf_backend.py --model bert-base-uncased" ...

Token lists exchanged with the client exclude special tokens; the server
adds them. Hidden states are the final encoder outputs, the input of the
masked-LM head.
"""

import argparse
import json
import sys

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

HEAD_ATTRS = ("cls", "lm_head", "predictions")


class Server:
    def __init__(self, name, device):
        self.name = name
        self.tok = AutoTokenizer.from_pretrained(name)
        self.model = AutoModelForMaskedLM.from_pretrained(name).to(device).eval()
        self.device = device
        self.head = next((getattr(self.model, a) for a in HEAD_ATTRS if hasattr(self.model, a)), None)
        if self.head is None:
            raise RuntimeError(f"no masked-LM head found on {name}")

    def _ids(self, tokens, masked):
        ids = self.tok.convert_tokens_to_ids(tokens)
        if masked is not None:
            if not 0 <= masked < len(ids):
                raise ValueError(f"masked position {masked} out of range")
            ids[masked] = self.tok.mask_token_id
        ids = self.tok.build_inputs_with_special_tokens(ids)
        return torch.tensor([ids], device=self.device)

    def _offset(self):
        probe = self.tok.mask_token_id
        return self.tok.build_inputs_with_special_tokens([probe]).index(probe)

    @torch.no_grad()
    def _hidden(self, tokens, masked):
        out = self.model(self._ids(tokens, masked), output_hidden_states=True)
        h = out.hidden_states[-1][0]
        off = self._offset()
        return h[off:off + len(tokens)], out.logits[0][off:off + len(tokens)]

    def _log_prob(self, logits, token):
        tid = self.tok.convert_tokens_to_ids(token)
        return float(torch.log_softmax(logits.double(), dim=-1)[tid])

    @torch.no_grad()
    def handle(self, req):
        op = req.get("op")
        if op == "info":
            return {"model_id": self.name, "hidden_size": self.model.config.hidden_size}
        if op == "tokenize":
            return {"tokens": self.tok.tokenize(req["text"])}
        if op == "log_prob":
            m = req["masked"]
            _, logits = self._hidden(req["tokens"], m)
            return {"log_prob": self._log_prob(logits[m], req["tokens"][m])}
        if op == "hidden":
            h, _ = self._hidden(req["tokens"], req.get("masked"))
            return {"hidden": h.double().cpu().tolist()}
        if op == "hidden_at":
            m = req["masked"]
            h, _ = self._hidden(req["tokens"], m)
            return {"hidden": h[m].double().cpu().tolist()}
        if op == "head":
            h = torch.tensor(req["hidden"], dtype=torch.float32, device=self.device)
            logits = self.head(h.view(1, 1, -1))[0, 0]
            return {"log_prob": self._log_prob(logits, req["token"])}
        raise ValueError(f"unknown op {op!r}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="bert-base-uncased")
    ap.add_argument("--device", default="cpu")
    args = ap.parse_args()
    torch.manual_seed(0)
    try:
        server = Server(args.model, args.device)
    except Exception as e:  # noqa: BLE001
        print(json.dumps({"error": f"cannot load {args.model}: {e}"}), flush=True)
        return 1
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            reply = server.handle(json.loads(line))
        except Exception as e:  # noqa: BLE001
            reply = {"error": str(e)}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
