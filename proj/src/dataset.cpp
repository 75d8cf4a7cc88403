#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "errors.hpp"
#include "signal.hpp"
#include "wav.hpp"

namespace auscult {

namespace {

[[noreturn]] void row_fail(const std::filesystem::path& path, size_t line, const std::string& what) {
    fail(Errc::format, path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::ifstream open_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "cannot open " + path.string());
    return in;
}

} // namespace

Label parse_label(const std::string& text) {
    if (text == "normal") return Label::normal;
    if (text == "abnormal") return Label::abnormal;
    if (text == "unsure") return Label::unsure;
    fail(Errc::format, "unknown label '" + text + "'");
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string line;
    size_t lineno = 0;

    if (!std::getline(in, line)) fail(Errc::format, path.string() + ": empty file");
    ++lineno;
    if (split_fields(line) != std::vector<std::string>{"id", "pcg", "ecg", "annotations", "label"})
        row_fail(path, lineno, "expected header id,pcg,ecg,annotations,label");

    std::vector<ManifestRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 5) row_fail(path, lineno, "expected 5 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) row_fail(path, lineno, "empty id");
        if (f[1].empty() && f[2].empty()) row_fail(path, lineno, "row has neither pcg nor ecg");
        ManifestRow r;
        r.id = f[0];
        r.pcg = f[1];
        r.ecg = f[2];
        r.annotations = f[3];
        try {
            r.label = parse_label(f[4]);
        } catch (const Error& e) {
            row_fail(path, lineno, e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<size_t> read_cycles_csv(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::vector<size_t> bounds;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(t, &pos);
        } catch (const std::exception&) {
            row_fail(path, lineno, "not an integer: '" + t + "'");
        }
        if (pos != t.size()) row_fail(path, lineno, "trailing junk after integer: '" + t + "'");
        if (v < 0) row_fail(path, lineno, "negative sample index");
        if (!bounds.empty() && static_cast<size_t>(v) <= bounds.back())
            row_fail(path, lineno, "boundaries must be strictly increasing");
        bounds.push_back(static_cast<size_t>(v));
    }
    return bounds;
}

void write_cycles_csv(const std::filesystem::path& path, const std::vector<size_t>& bounds) {
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot open " + path.string() + " for writing");
    for (size_t b : bounds) out << b << "\n";
    if (!out) fail(Errc::io, "write failed: " + path.string());
}

std::vector<std::pair<std::string, double>> read_predictions_csv(
    const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string line;
    size_t lineno = 0;

    if (!std::getline(in, line)) fail(Errc::format, path.string() + ": empty file");
    ++lineno;
    if (split_fields(line) != std::vector<std::string>{"id", "score"})
        row_fail(path, lineno, "expected header id,score");

    std::vector<std::pair<std::string, double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 2) row_fail(path, lineno, "expected 2 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) row_fail(path, lineno, "empty id");
        size_t pos = 0;
        double score = 0;
        try {
            score = std::stod(f[1], &pos);
        } catch (const std::exception&) {
            row_fail(path, lineno, "not a number: '" + f[1] + "'");
        }
        if (pos != f[1].size()) row_fail(path, lineno, "trailing junk after score");
        rows.emplace_back(f[0], score);
    }
    return rows;
}

std::map<std::string, int> read_labels_csv(const std::filesystem::path& path) {
    std::ifstream in = open_text(path);
    std::string line;
    size_t lineno = 0;

    if (!std::getline(in, line)) fail(Errc::format, path.string() + ": empty file");
    ++lineno;
    if (split_fields(line) != std::vector<std::string>{"id", "label"})
        row_fail(path, lineno, "expected header id,label");

    std::map<std::string, int> labels;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 2) row_fail(path, lineno, "expected 2 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) row_fail(path, lineno, "empty id");
        int v;
        if (f[1] == "normal") v = 0;
        else if (f[1] == "abnormal") v = 1;
        else row_fail(path, lineno, "label must be normal or abnormal, got '" + f[1] + "'");
        if (labels.count(f[0])) row_fail(path, lineno, "duplicate id '" + f[0] + "'");
        labels[f[0]] = v;
    }
    return labels;
}

NoiseBank load_noise_bank(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        fail(Errc::io, "noise bank is not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    NoiseBank bank;
    for (const auto& f : files) {
        bank.clips.push_back(read_wav(f));
        bank.names.push_back(f.filename().string());
    }
    return bank;
}

PairedRecord load_record(const ManifestRow& row, const std::filesystem::path& base_dir,
                         double rate_hz) {
    auto resolve = [&](const std::string& rel) { return base_dir / rel; };
    // Annotations sit on the PCG timeline; a rate change moves them too.
    double bound_scale = 1.0;
    auto prep = [&](const std::filesystem::path& p, bool is_pcg) {
        Signal s = read_wav(p);
        if (s.sample_rate_hz != rate_hz) {
            if (is_pcg) bound_scale = rate_hz / s.sample_rate_hz;
            s = resample(s, rate_hz);
        }
        return normalize(s);
    };

    PairedRecord rec;
    rec.id = row.id;
    rec.label = row.label;
    if (!row.pcg.empty()) rec.pcg = prep(resolve(row.pcg), true);
    if (!row.ecg.empty()) rec.ecg = prep(resolve(row.ecg), false);
    if (!row.annotations.empty()) {
        rec.boundaries = read_cycles_csv(resolve(row.annotations));
        if (bound_scale != 1.0)
            for (size_t& b : rec.boundaries)
                b = static_cast<size_t>(std::llround(static_cast<double>(b) * bound_scale));
    }
    if (!rec.boundaries.empty() && !rec.pcg.samples.empty() &&
        rec.boundaries.back() >= rec.pcg.samples.size())
        fail(Errc::format, row.id + ": cycle boundary " + std::to_string(rec.boundaries.back()) +
                               " past end of pcg (" + std::to_string(rec.pcg.samples.size()) + ")");
    return rec;
}

} // namespace auscult
