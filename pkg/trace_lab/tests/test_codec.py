import os
import tempfile
import unittest

import numpy as np

from trace_lab.channels import channel_from_rep
from trace_lab.codec import detect_kind, dumps, load_any, loads, roundtrip
from trace_lab.errors import SchemaError
from trace_lab.freegroup import UnitaryTuple
from trace_lab.linalg import haar_unitary
from trace_lab.matprod import MnMnRep, random_mn_rep
from trace_lab.obstructions import load_table


class TestCodec(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_roundtrip_every_kind(self):
        '''
        Test roundtrip on one file of each kind

        Parameters:
        value: CMatrix, MnMnRep, channel, unitary tuple and character table
        '''
        values = {
            "cmatrix": haar_unitary(3, 0),
            "mnmn": random_mn_rep(3, 2, 0),
            "channel": channel_from_rep(random_mn_rep(2, 2, 1)),
            "unitaries": UnitaryTuple.haar(2, 3, 4),
            "table": load_table("s3"),
        }
        for kind, value in values.items():
            with self.subTest(kind=kind):
                path = self._write(f"{kind}.json", dumps(value))
                self.assertTrue(roundtrip(path))
                self.assertEqual(load_any(path)[0], kind)

    def test_loads_restores_values(self):
        rep = random_mn_rep(3, 1, 2)
        kind, value = loads(dumps(rep))
        self.assertEqual(kind, "mnmn")
        self.assertIsInstance(value, MnMnRep)
        np.testing.assert_array_equal(value.f_units, rep.f_units)

    def test_truncated_file(self):
        text = dumps(random_mn_rep(2, 1, 0))
        path = self._write("truncated.json", text[: len(text) // 2])
        with self.assertRaises(SchemaError):
            roundtrip(path)

    def test_non_utf8_file(self):
        path = os.path.join(self.tmp.name, "binary.json")
        with open(path, "wb") as f:
            f.write(b'{"dim": 1, "data": [[1.0, 0.0]]}\xff\xfe')
        with self.assertRaises(SchemaError):
            load_any(path)
        with self.assertRaises(SchemaError):
            roundtrip(path)

    def test_unknown_and_malformed(self):
        with self.assertRaises(SchemaError):
            detect_kind({"colour": "blue"})
        with self.assertRaises(SchemaError):
            detect_kind([1, 2])
        with self.assertRaises(SchemaError):
            loads('{"dim": 2, "data": [[1, 0]]}')
        with self.assertRaises(SchemaError):
            loads('{"n": 2, "k": 4, "e": [[{"dim": 1}]], "f": []}')


if __name__ == "__main__":
    unittest.main()
