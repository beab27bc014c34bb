#!/usr/bin/env python3
"""
Experiment Preset Launcher
==========================

This script runs several named experiment presets simultaneously, each as
its own cli.py process writing <results>/<preset>.csv, then summarizes the
results folder.
"""

import os
import signal
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import config
import process_results
from config import get_available_presets, get_preset, preset_to_argv

CLI_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "cli.py")


class ExperimentLauncher:
    def __init__(self, results_folder=None):
        self.results_folder = results_folder or config.RESULTS_FOLDER
        self.processes = {}
        self.exit_codes = {}
        self.running = True

    def command_for(self, preset):
        out_path = os.path.join(self.results_folder, f"{preset}.csv")
        return [sys.executable, CLI_PATH, *preset_to_argv(preset), "--out", out_path]

    def launch_experiment(self, preset):
        """Run a single preset and relay its status lines"""
        try:
            settings = get_preset(preset)
            print(f"🚀 Starting {preset} ({settings['mode']} on {settings['function']}, n={settings['n']})...")

            process = subprocess.Popen(self.command_for(preset), stdout=subprocess.PIPE,
                                       stderr=subprocess.STDOUT, text=True, bufsize=1)
            self.processes[preset] = process

            for line in process.stdout:
                if line.strip():
                    print(f"[{preset}] {line.strip()}")
                if not self.running:
                    break
            self.exit_codes[preset] = process.wait()
            return self.exit_codes[preset]

        except Exception as e:
            print(f"❌ Error launching {preset}: {e}")
            self.exit_codes[preset] = -1
            return -1

    def launch_all(self, presets=None):
        """Run presets in parallel; returns {preset: exit code}"""
        if presets is None:
            presets = get_available_presets()
        os.makedirs(self.results_folder, exist_ok=True)

        print("🌟 q-Balazs-Szabados Experiments")
        print("=" * 50)
        print(f"📊 Running presets: {', '.join(presets)}")
        print(f"📁 Results folder: {self.results_folder}")
        print("=" * 50)

        with ThreadPoolExecutor(max_workers=max(1, min(config.MAX_WORKERS, len(presets)))) as executor:
            futures = [executor.submit(self.launch_experiment, preset) for preset in presets]
            try:
                for future in futures:
                    future.result()
            except KeyboardInterrupt:
                self.shutdown()
        return dict(self.exit_codes)

    def shutdown(self):
        """Stop all running experiments"""
        print("\n🛑 Stopping all experiments...")
        self.running = False
        for preset, process in self.processes.items():
            if process.poll() is None:
                print(f"⏹️ Stopping {preset}...")
                process.terminate()
                try:
                    process.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    print(f"⚠️ Force killing {preset}...")
                    process.kill()
        print("✅ All experiments stopped")

    def status(self):
        """Print the outcome of every launched preset"""
        labels = {0: "✅ holds", 1: "❌ falsified", 2: "🚫 refused", 3: "💥 evaluation error"}
        print("\n📊 Experiment Status:")
        print("-" * 40)
        for preset in self.processes:
            code = self.exit_codes.get(preset)
            label = "⏳ running" if code is None else labels.get(code, f"❓ exit code {code}")
            print(f"{label}: {preset}")


def select_presets(args):
    """Validate preset names given on the command line"""
    if not args:
        return None
    available = get_available_presets()
    invalid = [p for p in args if p not in available]
    if invalid:
        print(f"❌ Unknown presets: {', '.join(invalid)}")
        print(f"Available: {', '.join(available)}")
        raise SystemExit(2)
    return list(args)


def show_usage():
    """Show usage information"""
    print("🌟 q-Balazs-Szabados Experiment Launcher")
    print("=" * 50)
    print("\nUsage:")
    print("  python launch_all_experiments.py                  # Run all presets")
    print("  python launch_all_experiments.py thm1_q1 rate_q1  # Run specific presets")
    print("  python launch_all_experiments.py --help           # Show this help")
    print("\nAvailable presets:")
    for preset in get_available_presets():
        settings = get_preset(preset)
        print(f"  • {preset}: {settings['mode']} on {settings['function']} "
              f"(q={settings['q']}, beta={settings['beta']}, n={settings['n']})")
    print("\n💡 Tips:")
    print(f"  • Each preset writes {config.RESULTS_FOLDER}/<preset>.csv (set QBS_RESULTS_FOLDER to move it)")
    print("  • summary.json and index.json are regenerated after the run")
    print("  • Set GCS_BUCKET to archive the results folder")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if argv and argv[0] in ["--help", "-h", "help"]:
        show_usage()
        return 0

    launcher = ExperimentLauncher()

    def signal_handler(signum, frame):
        launcher.shutdown()
        sys.exit(130)

    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)

    presets = select_presets(argv)
    codes = launcher.launch_all(presets)
    launcher.status()

    process_results.summarize_results(launcher.results_folder)
    return 0 if codes and all(code == 0 for code in codes.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
