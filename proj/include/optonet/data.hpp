// Dataset ingestion: the XOR set, IDX container parsing (gzip accepted),
// max-pool compression and batch sampling.
#pragma once

#include <string>
#include <vector>

#include "optonet/common.hpp"

namespace optonet {

struct Sample {
    std::vector<double> features;  // normalized intensities in [0, 1]
    std::size_t label = 0;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t n_classes = 0;
    std::size_t feature_dim = 0;
    std::string digest;  // content hash, stable across runs and platforms

    void validate() const;
};

// {(0.2,0.2)->0, (0.2,1.0)->1, (1.0,0.2)->1, (1.0,1.0)->0}
Dataset xor_dataset();

// Big-endian IDX pair: image magic 2051 with dims (n, rows, cols), label
// magic 2049 with dims (n); pixel bytes divided by 255. Accepts gzip input
// (sniffed by magic). Counts must match between the two files.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Disjoint 2x2 max-pool of a square image; 784 -> 196 for 28x28 inputs.
std::vector<double> max_pool_2x2(const std::vector<double>& features);
Dataset max_pool_dataset(const Dataset& d);

// n samples, uniform without replacement when n <= |dataset|, else with
// replacement. Deterministic under the rng state.
std::vector<Sample> sample_batch(const Dataset& dataset, std::size_t n, Rng& rng);

// Restrict to the listed classes; labels remapped densely to 0..k-1 and the
// mapping folded into the digest. Warns (stderr) when a class is absent.
Dataset class_filter(const Dataset& dataset, const std::vector<std::size_t>& classes);

}  // namespace optonet
