import sys
import textwrap

import numpy as np
import pytest

from anovadistill.external import spawn_external
from anovadistill.predictor import PredictorError

ECHO_CHILD = textwrap.dedent(
    """
    import json, sys
    p = int(sys.argv[1])
    print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": p}), flush=True)
    for line in sys.stdin:
        req = json.loads(line)
        print(json.dumps({"id": req["id"], "y": [row[0] for row in req["x"]]}), flush=True)
    """
)


def spawn_child(tmp_path, body, args=(), p=3, **kwargs):
    script = tmp_path / "child.py"
    script.write_text(body, encoding="utf-8")
    cmd = [sys.executable, str(script), *map(str, args)]
    return spawn_external(cmd, p, **kwargs)


class TestHandshake:
    def test_dimension_mismatch(self, tmp_path):
        with pytest.raises(PredictorError, match="dimension mismatch"):
            spawn_child(tmp_path, ECHO_CHILD, args=(8,), p=10)

    def test_wrong_protocol_name(self, tmp_path):
        body = 'print(\'{"protocol": "other", "version": 1, "p": 3}\', flush=True)\n'
        with pytest.raises(PredictorError, match="handshake"):
            spawn_child(tmp_path, body, p=3)

    def test_immediate_exit(self, tmp_path):
        with pytest.raises(PredictorError, match="terminated before handshake"):
            spawn_child(tmp_path, "import sys; sys.exit(0)\n", p=3)


class TestRoundTrip:
    def test_echo_first_coordinate(self, tmp_path):
        pred = spawn_child(tmp_path, ECHO_CHILD, args=(3,), p=3)
        with pred:
            batch = np.array([[0.25, 0.5, 0.5], [0.5, 0.1, 0.9]])
            np.testing.assert_array_equal(pred.evaluate_batch(batch), [0.25, 0.5])
            assert pred.eval_count == 2

    def test_many_batches_bit_exact(self, tmp_path):
        pred = spawn_child(tmp_path, ECHO_CHILD, args=(4,), p=4)
        rng = np.random.default_rng(0)
        with pred:
            for _ in range(5):
                batch = rng.random((64, 4))
                np.testing.assert_array_equal(pred.evaluate_batch(batch), batch[:, 0])

    def test_clean_shutdown_exit_zero(self, tmp_path):
        pred = spawn_child(tmp_path, ECHO_CHILD, args=(3,), p=3)
        pred.evaluate_batch(np.zeros((1, 3)))
        assert pred.close() == 0


class TestFailureModes:
    def test_error_reply(self, tmp_path):
        body = textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": 2}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
                print(json.dumps({"id": req["id"], "error": "cannot evaluate"}), flush=True)
            """
        )
        pred = spawn_child(tmp_path, body, p=2)
        with pytest.raises(PredictorError, match="cannot evaluate"):
            pred.evaluate_batch(np.zeros((2, 2)))
        assert pred.eval_count == 0  # unanswered rows are not counted

    def test_child_dies_mid_stream(self, tmp_path):
        body = textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": 2}), flush=True)
            sys.stdin.readline()
            sys.exit(1)
            """
        )
        pred = spawn_child(tmp_path, body, p=2)
        with pytest.raises(PredictorError, match="terminated"):
            pred.evaluate_batch(np.zeros((2, 2)))
        assert pred.eval_count == 0

    def test_length_mismatch(self, tmp_path):
        body = textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": 2}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
                print(json.dumps({"id": req["id"], "y": [1.0]}), flush=True)
            """
        )
        pred = spawn_child(tmp_path, body, p=2)
        with pytest.raises(PredictorError, match="length"):
            pred.evaluate_batch(np.zeros((3, 2)))

    def test_timeout(self, tmp_path):
        body = textwrap.dedent(
            """
            import json, sys, time
            print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": 2}), flush=True)
            sys.stdin.readline()
            time.sleep(30)
            """
        )
        pred = spawn_child(tmp_path, body, p=2, timeout=0.5)
        with pytest.raises(PredictorError, match="timed out"):
            pred.evaluate_batch(np.zeros((1, 2)))
        pred._proc.kill()

    def test_nonfinite_reply_is_protocol_violation(self, tmp_path):
        body = textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"protocol": "meta-anova-predictor", "version": 1, "p": 2}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
                sys.stdout.write('{"id": %d, "y": [NaN]}\\n' % req["id"])
                sys.stdout.flush()
            """
        )
        pred = spawn_child(tmp_path, body, p=2)
        with pytest.raises(PredictorError):
            pred.evaluate_batch(np.zeros((1, 2)))


class TestConcurrency:
    def test_concurrent_batches_map_to_their_inputs(self, tmp_path):
        import threading

        pred = spawn_child(tmp_path, ECHO_CHILD, args=(3,), p=3)
        rng = np.random.default_rng(9)
        batches = [rng.random((32, 3)) for _ in range(12)]
        results = [None] * len(batches)

        def worker(idx):
            results[idx] = pred.evaluate_batch(batches[idx])

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(len(batches))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        with pred:
            pass
        for batch, got in zip(batches, results):
            np.testing.assert_array_equal(got, batch[:, 0])
