from metavec.cli import run

run()
