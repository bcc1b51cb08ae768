"""Wiring a live completion endpoint.

Starts a throwaway HTTP server that speaks the completion contract
(POST /v1/completions, continuation at choices[0].text) and answers like a
model that always guesses the first intent, then points a run at it. Any
inference server exposing the same contract drops in the same way,
including the adapter-serving endpoint from the trainer package.
"""

import json
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from nluharness import synth
from nluharness.corpus import write_canonical
from nluharness.metrics import format_report
from nluharness.runner import RunConfig, run_ic

world = synth.toy_world(n_intents=4, n_slots=8, seed=31)
first_description = sorted(world.intents.values())[0]


class FirstGuessHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        answer = {"model": "first-guess-demo", "choices": [{"text": first_description}]}
        data = json.dumps(answer).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


server = ThreadingHTTPServer(("127.0.0.1", 0), FirstGuessHandler)
threading.Thread(target=server.serve_forever, daemon=True).start()
base_url = f"http://127.0.0.1:{server.server_address[1]}"
print(f"serving a first-guess model at {base_url}\n")

work = Path(tempfile.mkdtemp(prefix="nlu-demo-"))
write_canonical(world.dataset(seed=1, split="train"), work / "train.json")
write_canonical(world.dataset(40, seed=2, split="test"), work / "test.json")
world.write_descriptions(work / "desc.json")

report = run_ic(
    RunConfig(
        task="IC",
        eval_path=str(work / "test.json"),
        eval_split="test",
        train_path=str(work / "train.json"),
        descriptions_path=str(work / "desc.json"),
        output_dir=str(work / "out"),
        templates=["P1", "P2", "P3", "P4"],
        backend={"kind": "http", "base_url": base_url},
        parallelism=4,
    )
)
print(format_report(report))
doc = json.loads((work / "out" / "report.json").read_text())
print(f"\nreport backend id: {doc['backend_id']}")
print("a model that always answers the same label lands near 1/n_intents accuracy")
server.shutdown()
