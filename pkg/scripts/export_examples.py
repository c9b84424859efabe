"""Write the built-in example plants and scenarios as JSON documents under data/."""
import argparse
from pathlib import Path

from uiobank import catalog, documents

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    (out / "plants").mkdir(parents=True, exist_ok=True)
    (out / "scenarios").mkdir(parents=True, exist_ok=True)
    for ex in range(1, 7):
        documents.write_json(out / "plants" / f"example{ex}.json",
                             documents.plant_to_dict(catalog.plant(ex)))
        doc = documents.scenario_to_dict(catalog.scenario(ex))
        doc["plant"] = f"../plants/example{ex}.json"
        documents.write_json(out / "scenarios" / f"example{ex}.json", doc)
    one_sensor = {"A": [[0.5]], "B": [[1.0]], "C": [[1.0]]}
    documents.write_json(out / "plants" / "one_sensor.json", one_sensor)
    print(f"wrote documents under {out}")


if __name__ == "__main__":
    main()
