#!/usr/bin/env python3
"""Extract the word-level benchmark files from published PyPI wheels.

questions-words.txt and a 3-column SimLex-999 ship inside gensim's test data;
the natural-form MEN file ships inside mangoes. Both wheels are fetched from
files.pythonhosted.org and checked against known md5 sums.
"""
import argparse
import hashlib
import io
import json
import sys
import urllib.request
import zipfile
from pathlib import Path

SOURCES = {
    "questions-words.txt": ("gensim", "4.4.0", "gensim/test/test_data/questions-words.txt",
                            "8b7461cbf7ecc0aec9b32eb626821105"),
    "simlex999.txt": ("gensim", "4.4.0", "gensim/test/test_data/simlex999.txt",
                      "ea3b421726e288d9c368d3db0f1831a4"),
    "MEN_natural_full.txt": ("mangoes", "3.1.0", "mangoes/resources/en/similarity/men.txt",
                             "acd96db1a843ddeb09070ea7c845b9b5"),
}


def wheel_url(package, version):
    with urllib.request.urlopen(f"https://pypi.org/pypi/{package}/{version}/json", timeout=60) as r:
        files = json.load(r)["urls"]
    wheels = [f["url"] for f in files if f["filename"].endswith(".whl")]
    if not wheels:
        raise RuntimeError(f"no wheel published for {package} {version}")
    return wheels[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "data")
    ap.add_argument("--wheel-dir", type=Path, help="use already-downloaded wheels from this directory")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    wheels = {}
    for name, (package, version, member, md5) in SOURCES.items():
        key = (package, version)
        if key not in wheels:
            local = sorted(args.wheel_dir.glob(f"{package}-{version}-*.whl")) if args.wheel_dir else []
            if local:
                wheels[key] = zipfile.ZipFile(local[0])
            else:
                url = wheel_url(package, version)
                print(f"downloading {url}", file=sys.stderr)
                with urllib.request.urlopen(url, timeout=600) as r:
                    wheels[key] = zipfile.ZipFile(io.BytesIO(r.read()))
        data = wheels[key].read(member)
        digest = hashlib.md5(data).hexdigest()
        if digest != md5:
            print(f"{name}: md5 {digest} does not match {md5}", file=sys.stderr)
            return 1
        (args.out / name).write_bytes(data)
        print(f"{name}\t{len(data)} bytes\t{digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
