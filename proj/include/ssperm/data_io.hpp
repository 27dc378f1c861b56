#pragma once

#include <string>
#include <vector>

#include "ssperm/nn.hpp"
#include "ssperm/privacy.hpp"
#include "ssperm/ring.hpp"

namespace ssperm {

// CSV with a header row; every column float except the label column(s)
// named "label" or "label*" (integer or float).
Dataset load_csv_dataset(const std::string& path);

// Raw binary tensor: ndim u8, dims u64 LE, float64 elements LE, row-major.
void save_double_tensor(const std::string& path,
                        const std::vector<u64>& shape,
                        const std::vector<double>& data);
std::pair<std::vector<u64>, std::vector<double>> load_double_tensor(
    const std::string& path);

SampleMatrix sample_matrix_from_csv(const std::string& path);
SampleMatrix sample_matrix_from_tensor(const std::string& path);

// Model checkpoint: one party's shares in the wire tensor format, one
// tensor block per parameter (weights and biases interleaved per layer).
void save_checkpoint(const std::string& path, const Network& net);
std::vector<std::pair<std::vector<u64>, std::vector<u64>>> load_checkpoint(
    const std::string& path);

}  // namespace ssperm
