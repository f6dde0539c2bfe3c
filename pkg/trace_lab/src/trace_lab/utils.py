import csv
import json
import logging
import os
import tempfile
from dataclasses import dataclass

from tenacity import Retrying, before_sleep_log, retry_if_result, stop_after_attempt

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "TRACE_LAB_OUTPUT_DIR"


@dataclass(frozen=True)
class Gate:
    name: str
    passed: bool
    value: object
    threshold: object

    @classmethod
    def at_most(cls, name, value, threshold):
        return cls(name, bool(value <= threshold), float(value), float(threshold))

    @classmethod
    def check(cls, name, passed):
        return cls(name, bool(passed), bool(passed), True)

    def to_dict(self):
        return {"name": self.name, "pass": self.passed, "value": self.value, "threshold": self.threshold}


def retry_until(make_candidate, accept, max_tries):
    """
    Calls make_candidate until accept(result) holds or max_tries is reached.

    Args:
        make_candidate (callable): Produces one attempt; reads its own attempt number.
        accept (callable): Predicate on an attempt's result.
        max_tries (int): Attempt cap.

    Returns:
        object: The accepted result, or the last one when tries ran out.
    """
    retrying = Retrying(
        stop=stop_after_attempt(max(1, int(max_tries))),
        retry=retry_if_result(lambda result: not accept(result)),
        before_sleep=before_sleep_log(logger, logging.INFO),
        retry_error_callback=lambda state: state.outcome.result(),
    )
    return retrying(make_candidate)


def set_env_vars(args):
    """
    Sets the environment variables for the run.

    Args:
        args (Namespace): Command-line arguments.
    """
    if getattr(args, "output_dir", None):
        os.environ[OUTPUT_DIR_ENV] = str(args.output_dir)


def resolve_output_path(out):
    """
    Places bare file names under the default output directory.

    Args:
        out (str): Output path from --out.

    Returns:
        str: Path the report is written to.
    """
    if os.path.dirname(out):
        return out
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), out)


def write_report(payload, path):
    """
    Writes a JSON report atomically (temporary file then rename).

    Args:
        payload (dict): JSON-ready report.
        path (str): Destination.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except OSError:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f"Report written to {path}")


def save_gates_to_csv(gates, filename="gates.csv"):
    """
    Saves the report gates to a CSV file.

    Args:
        gates (list): Gate values.
        filename (str): Name of the CSV file to save the gates to.
    """
    with open(filename, "w", newline="") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(["Gate", "Pass", "Value", "Threshold"])
        for gate in gates:
            writer.writerow([gate.name, gate.passed, gate.value, gate.threshold])
