#ifndef AUSCULT_FIXTURES_HPP
#define AUSCULT_FIXTURES_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "augment.hpp"
#include "rng.hpp"

namespace auscult {

struct FixtureSpec {
    size_t count = 16;
    double rate_hz = 2000.0;
    bool with_noise_bank = true;
};

struct FixtureSet {
    std::vector<PairedRecord> records;
    std::filesystem::path manifest; // written manifest path
};

// Synthesizes paired heart-sound / electrogram records with known cycle
// boundaries, writes WAVs + annotation CSVs + manifest under out_dir, and
// returns the in-memory records.  Identical seed, identical bytes.
FixtureSet make_fixtures(const std::filesystem::path& out_dir, const FixtureSpec& spec,
                         uint64_t seed);

// In-memory synthesis of a single record, shared with make_fixtures.
PairedRecord synth_record(const std::string& id, Label label, double rate_hz,
                          RandomStream& rng);

} // namespace auscult

#endif
