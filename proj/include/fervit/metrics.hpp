#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fervit/emotion.hpp"
#include "fervit/tensor.hpp"

namespace fervit {

// 7x7 counts, rows = true label, cols = predicted label.
class ConfusionMatrix {
public:
    ConfusionMatrix() { counts_.fill(0); }

    static ConfusionMatrix from_predictions(const std::vector<int>& predictions,
                                            const std::vector<int>& targets);

    void add(int target, int predicted);
    std::uint64_t at(std::size_t target, std::size_t predicted) const {
        return counts_[target * kNumEmotions + predicted];
    }
    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t target) const;    // class support
    std::uint64_t col_sum(std::size_t predicted) const; // prediction count
    std::uint64_t trace() const;

private:
    std::array<std::uint64_t, kNumEmotions * kNumEmotions> counts_;
};

// Weighted average recall in percent: per-class recall weighted by class
// support; algebraically equal to 100 * trace / N.
double war(const ConfusionMatrix& cm);

// Argmax with ties broken toward the lower class index.
std::vector<int> argmax_predictions(const Tensor& logits);

// Fraction (percent) of samples whose target is among the k largest logits;
// ties broken toward the lower class index.
double top_k_accuracy(const Tensor& logits, const std::vector<int>& targets, std::size_t k);

struct PrecisionRecallF1 {
    std::array<double, kNumEmotions> precision{}; // percent, 0 for empty columns
    std::array<double, kNumEmotions> recall{};
    std::array<double, kNumEmotions> f1{};
    double precision_macro = 0.0; // unweighted mean over classes with support
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

PrecisionRecallF1 precision_f1(const ConfusionMatrix& cm);

// All Table-style metrics for one dataset evaluation.
struct MetricReport {
    std::string dataset;
    std::size_t sample_count = 0;
    double war = 0.0;
    std::map<std::size_t, double> top_k; // k -> percent
    double precision_macro = 0.0;
    double f1_macro = 0.0;
    std::array<double, kNumEmotions> per_class_precision{};
    std::array<double, kNumEmotions> per_class_recall{};
    std::array<double, kNumEmotions> per_class_f1{};
    std::string error; // non-empty marks a failed dataset row

    std::string to_json() const;
    static MetricReport from_json(const std::string& text);
};

MetricReport compute_report(const Tensor& logits, const std::vector<int>& targets,
                            const std::string& dataset_name,
                            const std::vector<std::size_t>& top_ks = {1, 2});

} // namespace fervit
