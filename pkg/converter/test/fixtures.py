"""Fixture helper driven by a JSON argument.

mode "npz": build an archive from seeded arrays and print each array's
byte sha256.  mode "npy": write one .npy file.  mode "load": read a
converted dataset directory with the primary package and print its
shape and content hashes.
"""

import hashlib
import json
import sys

import numpy as np


def build_array(spec):
    rng = np.random.RandomState(spec["seed"])
    shape = tuple(spec["shape"])
    dtype = spec.get("dtype", "uint8")
    if dtype == "float32":
        arr = rng.rand(*shape).astype(np.float32)
    else:
        low = spec.get("low", 0)
        high = spec.get("high", 256)
        arr = rng.randint(low, high, size=shape).astype(dtype)
    if spec.get("fortran"):
        arr = np.asfortranarray(arr)
    return arr


def main():
    req = json.loads(sys.argv[1])
    mode = req["mode"]

    if mode == "npz":
        arrays = {k: build_array(s) for k, s in req["arrays"].items()}
        saver = np.savez_compressed if req.get("compressed", True) else np.savez
        saver(req["out"], **arrays)
        print(json.dumps({
            k: hashlib.sha256(np.ascontiguousarray(v).tobytes()).hexdigest()
            for k, v in arrays.items()
        }))
    elif mode == "npy":
        arr = build_array(req["array"])
        np.save(req["out"], arr)
        print(json.dumps({
            "sha256": hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()
        }))
    elif mode == "load":
        sys.path.insert(0, req.get("pkg", ""))
        from hdpan.pudata import load_dataset

        ds = load_dataset(req["dir"])
        print(json.dumps({
            "name": ds.name,
            "label_offset": ds.label_offset,
            "shape": list(ds.images.shape),
            "images_sha256": hashlib.sha256(ds.images.tobytes()).hexdigest(),
            "labels_sha256": hashlib.sha256(ds.labels.tobytes()).hexdigest(),
        }))
    else:
        raise SystemExit(f"unknown mode {mode}")


if __name__ == "__main__":
    main()
