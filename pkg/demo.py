#!/usr/bin/env python3
"""
Demo script for the Indoor Positioning System
Shows the offline map, the three matchers, the fused tracker and the line-protocol server
"""

import math
import os
import sys

# Add the project root to the path
sys.path.insert(0, os.path.abspath('.'))

from ips.fingerprint import build_radio_map
from ips.locators import locate_knn, locate_nn, locate_wknn
from ips.orchestrator import PositioningOrchestrator
from ips.service.server import LocateClient, ServerState, start_server
from ips.simulation.simulator import DEFAULT_ALGORITHMS, compare_trajectories, run_benchmark
from ips.stores.csv_store import CsvFingerprintStore, records_to_fingerprints
from schemas.positioning_schema import Position, SimConfig

FIELD_FINGERPRINTS = 'sample_data/field_fingerprints.csv'


def main():
    """
    Main demo function
    """
    print("📡 Indoor Positioning System Demo")
    print("=" * 50)

    orchestrator = PositioningOrchestrator()

    # Create sample configuration if it doesn't exist
    if not os.path.exists(orchestrator.config_file):
        print("📝 Creating sample configuration...")
        orchestrator.create_sample_config()

    # Offline stage
    print("\n🗺️  Building radio map from field fingerprints...")
    records = CsvFingerprintStore(FIELD_FINGERPRINTS).load()
    radio_map = build_radio_map(records_to_fingerprints(records), len(records[0].ap_rss))
    print(f"  📋 Records: {len(records)}")
    print(f"  📍 Reference points: {len(radio_map)}")
    print(f"  📶 APs: {radio_map.ap_count}")

    # Online stage
    query = (-45.0, -41.0, -55.0, -68.0, -67.0)
    print(f"\n🎯 Locating {query}:")
    for name, position in (
        ("NN", locate_nn(radio_map, query)),
        ("KNN (K=5)", locate_knn(radio_map, query, 5)),
        ("WKNN (K=5)", locate_wknn(radio_map, query, 5)),
    ):
        print(f"  {name}: ({position.x:.3f}, {position.y:.3f})")

    # Synthetic benchmark
    print("\n⚡ Running synthetic benchmark (20 x 20 m, 4 APs)...")
    config = SimConfig(test_samples=300)
    for algorithm, stats in run_benchmark(config, DEFAULT_ALGORITHMS).items():
        print(f"  {algorithm.label}: mean {stats.mean:.2f} m, "
              f"median {stats.median:.2f} m, P(<2 m) {stats.cdf_at(2.0):.2f}")

    print("\n🚶 Walking an L-shaped path with the fused WKNN + PDR tracker...")
    path = [Position(x=3.0, y=3.0), Position(x=13.0, y=3.0), Position(x=13.0, y=12.0)]
    comparison = compare_trajectories(config, path)
    fused = comparison.fused
    print(f"  Steps: {len(fused) - 1}")
    print(f"  Fix: ({fused.start.x:.2f}, {fused.start.y:.2f})  End: ({fused.final.x:.2f}, {fused.final.y:.2f})")
    print(f"  End error: {math.hypot(fused.final.x - 13.0, fused.final.y - 12.0):.2f} m")

    # Service round trip
    print("\n🔌 Starting localization server...")
    state = ServerState(CsvFingerprintStore(FIELD_FINGERPRINTS), orchestrator.locate_config, orchestrator.pdr_config)
    server, thread = start_server(state)
    try:
        with LocateClient("127.0.0.1", server.port) as client:
            response = client.locate(query)
            print(f"  LOCATE -> {response.values}")
            response = client.track_start(query)
            print(f"  TRACKSTART -> {response.values}")
            for i, heading in enumerate((0.0, 0.0, math.pi / 2), start=1):
                print(f"  TRACKSTEP -> {client.track_step(0.5 * i, heading).values}")
    finally:
        server.shutdown()
        server.server_close()
        thread.join()

    print("\n✅ Demo completed successfully!")

    # Print usage instructions
    print("\n" + "=" * 50)
    print("🎯 Usage Instructions:")
    print("1. Install requirements: pip install -r requirements.txt")
    print(f"2. Build a map: python -m ips.orchestrator build-map {FIELD_FINGERPRINTS}")
    print(f"3. Locate: python -m ips.orchestrator locate {FIELD_FINGERPRINTS} --rss=-46,-41,-55,-68,-67")
    print("4. Benchmark: python -m ips.orchestrator simulate --seed 42 --out results")
    print("5. Serve: python -m ips.orchestrator serve --port 8765 --db data/fingerprints.csv")
    print("")
    print(f"📁 Configuration file: {orchestrator.config_file}")
    print("📋 Log file: logs/ips.log")


if __name__ == "__main__":
    main()
