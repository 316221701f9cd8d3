"""Test suite for the MCCS miner."""
