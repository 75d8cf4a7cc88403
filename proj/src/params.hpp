#ifndef AUSCULT_PARAMS_HPP
#define AUSCULT_PARAMS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rng.hpp"

namespace auscult {

// Every random decision an augmentation makes flows through a ParamSource, so
// a run can either draw fresh values (and log them) or replay a logged
// sequence bit for bit without the generator.

enum class DrawKind : uint8_t { gate, uniform, randint, choice, gaussians };

struct Draw {
    std::string name;
    DrawKind kind = DrawKind::uniform;
    double scalar = 0.0;        // gate: 0/1, uniform/randint/choice: the value
    std::vector<double> values; // gaussians only
};

struct DrawLog {
    std::vector<Draw> draws;
};

class ParamSource {
public:
    virtual ~ParamSource() = default;
    virtual bool gate(std::string_view name, double p) = 0;
    virtual double uniform(std::string_view name, double lo, double hi) = 0;
    virtual int64_t randint(std::string_view name, int64_t lo, int64_t hi) = 0;
    virtual uint64_t choice(std::string_view name, uint64_t n) = 0;
    virtual std::vector<double> gaussians(std::string_view name, size_t n, double mu,
                                          double sigma) = 0;
};

class RngParamSource final : public ParamSource {
public:
    explicit RngParamSource(RandomStream rng, DrawLog* log = nullptr)
        : rng_(rng), log_(log) {}

    bool gate(std::string_view name, double p) override;
    double uniform(std::string_view name, double lo, double hi) override;
    int64_t randint(std::string_view name, int64_t lo, int64_t hi) override;
    uint64_t choice(std::string_view name, uint64_t n) override;
    std::vector<double> gaussians(std::string_view name, size_t n, double mu,
                                  double sigma) override;

private:
    void record(std::string_view name, DrawKind kind, double scalar,
                std::vector<double> values = {});
    RandomStream rng_;
    DrawLog* log_;
};

// Feeds back a logged sequence.  Name, kind, and range mismatches mean the
// log does not belong to this code path and raise config errors.
class ReplayParamSource final : public ParamSource {
public:
    explicit ReplayParamSource(const DrawLog& log) : log_(&log) {}

    bool gate(std::string_view name, double p) override;
    double uniform(std::string_view name, double lo, double hi) override;
    int64_t randint(std::string_view name, int64_t lo, int64_t hi) override;
    uint64_t choice(std::string_view name, uint64_t n) override;
    std::vector<double> gaussians(std::string_view name, size_t n, double mu,
                                  double sigma) override;

    size_t consumed() const { return pos_; }
    bool exhausted() const { return pos_ == log_->draws.size(); }

private:
    const Draw& take(std::string_view name, DrawKind kind);
    const DrawLog* log_;
    size_t pos_ = 0;
};

} // namespace auscult

#endif
