# Readout Throughput - Source Package
