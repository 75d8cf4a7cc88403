#ifndef AUSCULT_DATASET_HPP
#define AUSCULT_DATASET_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "augment.hpp"

namespace auscult {

struct ManifestRow {
    std::string id;
    std::string pcg;         // path, may be empty
    std::string ecg;         // path, may be empty
    std::string annotations; // cycles CSV path, may be empty
    Label label = Label::normal;
};

// Header must be exactly: id,pcg,ecg,annotations,label.  Parse errors carry
// the file name and line number.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

Label parse_label(const std::string& text); // normal | abnormal | unsure

// One strictly increasing sample index per line.
std::vector<size_t> read_cycles_csv(const std::filesystem::path& path);
void write_cycles_csv(const std::filesystem::path& path, const std::vector<size_t>& bounds);

// Header id,score; one fragment per row, ids repeat.
std::vector<std::pair<std::string, double>> read_predictions_csv(
    const std::filesystem::path& path);

// Header id,label with normal/abnormal per subject; abnormal is positive.
std::map<std::string, int> read_labels_csv(const std::filesystem::path& path);

// Reads every .wav in the directory, sorted by file name.
NoiseBank load_noise_bank(const std::filesystem::path& dir);

// Loads one manifest row: WAVs resampled to rate_hz and normalized,
// annotations attached when present.
PairedRecord load_record(const ManifestRow& row, const std::filesystem::path& base_dir,
                         double rate_hz);

} // namespace auscult

#endif
