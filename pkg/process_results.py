"""Post-processing of experiment tables: per-file summaries, an index of the
results folder and regression comparison against a stored baseline."""

import glob
import json
import os
import sys
from typing import Any, Dict, List, Optional

import mpmath
import numpy as np
import pandas as pd

import config

# Optional GCS sync for generated files
try:
    import gcs_utils  # type: ignore
except Exception:
    gcs_utils = None

NUMERIC_COLUMNS = ["bracket_n", "r", "lhs", "rhs", "normalized_error"]
FLAG_COLUMNS = ["holds", "precision_ok"]


def load_table(path: str) -> pd.DataFrame:
    """Read an emitted CSV keeping every value as text (25 significant digits survive)."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in config.CSV_HEADER if c not in df.columns]
    if missing:
        raise ValueError(f"{path} is not an experiment table: missing columns {', '.join(missing)}")
    df["n"] = df["n"].astype(int)
    for column in FLAG_COLUMNS:
        df[column] = df[column].str.lower() == "true"
    return df.sort_values("n").reset_index(drop=True)


def loglog_slope(df: pd.DataFrame) -> Optional[float]:
    """Least-squares slope of log(lhs) against log(bracket_n) over rows with positive lhs."""
    lhs = pd.to_numeric(df["lhs"], errors="coerce")
    brackets = pd.to_numeric(df["bracket_n"], errors="coerce")
    usable = (lhs > 0) & (brackets > 0)
    if usable.sum() < 2 or brackets[usable].nunique() < 2:
        return None
    return float(np.polyfit(np.log(brackets[usable]), np.log(lhs[usable]), 1)[0])


def summarize_table(path: str) -> Dict[str, Any]:
    df = load_table(path)
    normalized = pd.to_numeric(df["normalized_error"], errors="coerce")
    return {
        "file": os.path.basename(path),
        "rows": int(len(df)),
        "n": [int(n) for n in df["n"]],
        "all_holds": bool(df["holds"].all()),
        "all_precision_ok": bool(df["precision_ok"].all()),
        "loglog_slope": loglog_slope(df),
        "max_normalized_error": None if normalized.isna().all() else float(normalized.max()),
    }


def summarize_results(folder: str = config.RESULTS_FOLDER) -> Dict[str, Any]:
    """Write summary.json and index.json for every experiment CSV in folder."""
    os.makedirs(folder, exist_ok=True)
    csv_files = sorted(glob.glob(os.path.join(folder, "*.csv")))
    if not csv_files:
        print("⚠️ No CSV files found for processing")
        return {}

    print(f"📊 Summarizing {len(csv_files)} result tables...")
    summaries = {}
    for csv_file in csv_files:
        name = os.path.splitext(os.path.basename(csv_file))[0]
        try:
            summaries[name] = summarize_table(csv_file)
            icon = "✅" if summaries[name]["all_holds"] else "❌"
            print(f"{icon} {name}: {summaries[name]['rows']} rows")
        except Exception as e:
            print(f"❌ Error loading {csv_file}: {e}")

    _write_json(os.path.join(folder, "summary.json"), summaries)
    print("📋 Generated summary.json")
    _write_json(os.path.join(folder, "index.json"), {
        "tables": [os.path.basename(f) for f in csv_files],
        "summary_files": ["summary.json", "index.json"],
        "failing": sorted(name for name, s in summaries.items() if not (s["all_holds"] and s["all_precision_ok"])),
    })
    print("🗂️ Generated index.json")

    try:
        if gcs_utils and gcs_utils.is_gcs_enabled():
            archived = gcs_utils.archive_folder(folder)
            print(f"☁️ Archived {len(archived)} files to GCS")
    except Exception as e:
        print(f"⚠️ GCS archive skipped: {e}")
    return summaries


def _write_json(path: str, payload):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)


def _drift(current: str, baseline: str, rtol) -> bool:
    if current == "" or baseline == "":
        return current != baseline
    a, b = mpmath.mpf(current), mpmath.mpf(baseline)
    return abs(a - b) > rtol * max(abs(a), abs(b))


def compare_to_baseline(current_path: str, baseline_path: str, rtol: float = config.AGREEMENT_TOL) -> List[Dict[str, Any]]:
    """Rows whose numeric columns drift beyond rtol (relative) or whose flags or n sets differ."""
    current, baseline = load_table(current_path), load_table(baseline_path)
    merged = current.merge(baseline, on="n", how="outer", suffixes=("", "_baseline"), indicator=True)
    drifts = []
    with mpmath.workdps(config.CSV_DIGITS + 5):
        tol = mpmath.mpf(rtol)
        for _, row in merged.iterrows():
            n = int(row["n"])
            if row["_merge"] != "both":
                side = "baseline" if row["_merge"] == "right_only" else "current run"
                drifts.append({"n": n, "column": "n", "current": None, "baseline": None,
                               "detail": f"only in {side}"})
                continue
            for column in NUMERIC_COLUMNS:
                if _drift(row[column], row[f"{column}_baseline"], tol):
                    drifts.append({"n": n, "column": column, "current": row[column],
                                   "baseline": row[f"{column}_baseline"]})
            for column in FLAG_COLUMNS:
                if bool(row[column]) != bool(row[f"{column}_baseline"]):
                    drifts.append({"n": n, "column": column, "current": bool(row[column]),
                                   "baseline": bool(row[f"{column}_baseline"])})
    return drifts


def fetch_baseline(name: str, local_path: str) -> bool:
    """Download <prefix>/baselines/<name>.csv from GCS when configured."""
    if not (gcs_utils and gcs_utils.is_gcs_enabled()):
        return False
    blob = "/".join([gcs_utils.GCS_PREFIX.strip("/"), "baselines", f"{name}.csv"])
    return gcs_utils.download_if_exists(blob, local_path)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] == "--compare":
        if len(argv) < 3:
            print("Usage: python process_results.py --compare CURRENT.csv BASELINE.csv [RTOL]")
            return 2
        rtol = float(argv[3]) if len(argv) > 3 else config.AGREEMENT_TOL
        if not os.path.exists(argv[2]) and fetch_baseline(os.path.splitext(os.path.basename(argv[2]))[0], argv[2]):
            print(f"☁️ Downloaded baseline {argv[2]}")
        drifts = compare_to_baseline(argv[1], argv[2], rtol)
        for d in drifts:
            detail = d.get("detail") or f"{d['current']} vs {d['baseline']}"
            print(f"❌ n={d['n']} {d['column']}: {detail}")
        if not drifts:
            print(f"✅ {argv[1]} matches {argv[2]} within {rtol}")
        return 1 if drifts else 0
    summarize_results(argv[0] if argv else config.RESULTS_FOLDER)
    return 0


if __name__ == "__main__":
    sys.exit(main())
