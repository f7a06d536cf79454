"""SASS listing parsing, chain-integrity checks, and opcode-family verdicts
against checked-in fixture listings (no toolkit required)."""

import random

import pytest

from gpudissect.errors import (
    ListingMismatch,
    NoMatrixInstructionFound,
    ToolchainMissing,
)
from gpudissect.kernels import gen_clock_overhead, gen_dependent_chain
from gpudissect.kernels.types import KernelSpec, Workload, mma_for_format
from gpudissect.sasscheck import (
    OpcodeExpectation,
    SassLine,
    SassListing,
    classify_mma,
    listing_for_entry,
    parse_line,
    parse_listing,
    verification_report,
    verify_chain_integrity,
    _run_tool,
)

from conftest import sass_text


def _chain_kernel(chain_len=4, iterations=256):
    spec = KernelSpec(workload=Workload.INT32_MAD, chain_len=chain_len,
                      iterations=iterations)
    return gen_dependent_chain(spec)


class TestParsing:
    def test_functions_split(self):
        listings = parse_listing(sass_text("int32_chain_sm120a.sass"), "sm_120a")
        assert len(listings) == 1
        assert listings[0].entry == "gd_int32_mad_c4_p1_i256_w1"
        assert len(listings[0].lines) == 16

    def test_predicates_and_operands(self):
        listings = parse_listing(sass_text("int32_chain_sm120a.sass"), "sm_120a")
        branch = [l for l in listings[0].lines if l.opcode == "BRA"][0]
        assert branch.predicate == "@P1"
        assert branch.operands == "0x60"

    def test_round_trip(self):
        listings = parse_listing(sass_text("mma_e4m3_sm120a.sass"), "sm_120a")
        for line in listings[0].lines:
            again = parse_line(line.render())
            assert again == line

    def test_plain_text_without_headers(self):
        listings = parse_listing("IMAD R0, R1, R2, R0 ;\nEXIT ;\n", "sm_120a")
        assert len(listings) == 1
        assert listings[0].entry is None
        assert listings[0].lines[0].family == "IMAD"


class TestChainIntegrity:
    def test_intact_chain_passes(self):
        kernel = _chain_kernel(chain_len=4)
        listing = parse_listing(sass_text("int32_chain_sm120a.sass"),
                                "sm_120a")[0]
        report = verify_chain_integrity(kernel, listing)
        assert report.passed
        assert report.counted == 4
        assert report.required == 4

    def test_mutation_detected(self):
        """Deleting one arithmetic line must flip the verdict."""
        text = sass_text("int32_chain_sm120a.sass")
        lines = text.splitlines()
        imad_idx = next(i for i, l in enumerate(lines) if "IMAD" in l)
        mutated = "\n".join(lines[:imad_idx] + lines[imad_idx + 1:])
        kernel = _chain_kernel(chain_len=4)
        listing = parse_listing(mutated, "sm_120a")[0]
        report = verify_chain_integrity(kernel, listing)
        assert not report.passed
        assert report.counted == 3

    def test_clock_overhead_trivially_passes(self):
        kernel = gen_clock_overhead()
        listing = SassListing(lines=(SassLine("CS2R", "R6, SR_CLOCKLO"),
                                     SassLine("EXIT", "")),
                              arch="sm_120a", entry=kernel.entry_symbol)
        report = verify_chain_integrity(kernel, listing)
        assert report.passed and report.required == 0

    def test_listing_mismatch(self):
        kernel = _chain_kernel(chain_len=2, iterations=8)  # different name
        listing = parse_listing(sass_text("int32_chain_sm120a.sass"),
                                "sm_120a")[0]
        with pytest.raises(ListingMismatch):
            verify_chain_integrity(kernel, listing)

    def test_entry_lookup(self):
        listings = parse_listing(sass_text("int32_chain_sm120a.sass"),
                                 "sm_120a")
        found = listing_for_entry(listings, "gd_int32_mad_c4_p1_i256_w1")
        assert found.entry == "gd_int32_mad_c4_p1_i256_w1"
        with pytest.raises(ListingMismatch):
            listing_for_entry(listings, "nope")


class TestClassifyMma:
    @staticmethod
    def _expect(fmt, families, arch):
        return OpcodeExpectation(
            input_format=mma_for_format(fmt),
            expected=frozenset(families),
            arch=arch,
        )

    def test_sm90_lowers_to_hmma(self):
        listing = parse_listing(sass_text("mma_f16_sm90.sass"), "sm_90")[0]
        verdict = classify_mma(listing, self._expect("f16", {"HMMA"}, "sm_90"))
        assert verdict.passed
        assert verdict.families == ("HMMA",)

    @pytest.mark.parametrize("fmt", ["e4m3", "e5m2", "e3m2", "e2m3"])
    def test_fp8_fp6_lower_to_qmma(self, fmt):
        listing = parse_listing(sass_text(f"mma_{fmt}_sm120a.sass"),
                                "sm_120a")[0]
        verdict = classify_mma(listing, self._expect(fmt, {"QMMA"}, "sm_120a"))
        assert verdict.passed

    def test_fp4_falls_back_to_qmma(self):
        listing = parse_listing(sass_text("mma_e2m1_sm120a.sass"), "sm_120a")[0]
        verdict = classify_mma(listing, self._expect("e2m1", {"QMMA"},
                                                     "sm_120a"))
        assert verdict.passed

    def test_block_scaled_fp4_uses_omma(self):
        listing = parse_listing(sass_text("mma_e2m1_blockscale_sm120a.sass"),
                                "sm_120a")[0]
        verdict = classify_mma(listing, self._expect("e2m1", {"OMMA"},
                                                     "sm_120a"))
        assert verdict.passed

    def test_offenders_reported(self):
        listing = parse_listing(sass_text("mma_f16_sm90.sass"), "sm_90")[0]
        verdict = classify_mma(listing, self._expect("f16", {"QMMA"}, "sm_90"))
        assert not verdict.passed
        assert verdict.offenders == ("HMMA",)

    def test_no_matrix_instruction(self):
        listing = parse_listing(sass_text("int32_chain_sm120a.sass"),
                                "sm_120a")[0]
        with pytest.raises(NoMatrixInstructionFound):
            classify_mma(listing, self._expect("e4m3", {"QMMA"}, "sm_120a"))

    def test_order_independence(self):
        base = parse_listing(sass_text("mma_e4m3_sm120a.sass"), "sm_120a")[0]
        rng = random.Random(3)
        shuffled_lines = list(base.lines)
        rng.shuffle(shuffled_lines)
        shuffled = SassListing(lines=tuple(shuffled_lines), arch=base.arch,
                               entry=base.entry)
        expect = self._expect("e4m3", {"QMMA"}, "sm_120a")
        assert classify_mma(base, expect) == classify_mma(shuffled, expect)

    def test_expectation_validation(self):
        with pytest.raises(ValueError):
            OpcodeExpectation(input_format=mma_for_format("e4m3"),
                              expected=frozenset(), arch="sm_120a")


class TestReportsAndTools:
    def test_verification_report_shape(self):
        kernel = _chain_kernel(chain_len=4)
        listing = parse_listing(sass_text("int32_chain_sm120a.sass"),
                                "sm_120a")[0]
        report = verification_report(kernel, listing)
        assert report["integrity"]["passed"] is True
        assert report["kernel"] == kernel.name

    def test_missing_toolchain(self):
        with pytest.raises(ToolchainMissing):
            _run_tool("definitely-not-ptxas --version")
