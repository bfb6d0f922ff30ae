#include "optonet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <zlib.h>

namespace optonet {
namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

bool is_gzip(const std::vector<unsigned char>& b) {
    return b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const std::string& path) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK)  // +32: gzip/zlib auto-detect
        throw IoError("zlib init failed for " + path);
    std::vector<unsigned char> out;
    out.reserve(in.size() * 4);
    std::vector<unsigned char> buf(1 << 16);
    zs.next_in = const_cast<unsigned char*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw IoError("gzip stream corrupt in " + path);
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

class BigEndianReader {
  public:
    BigEndianReader(const std::vector<unsigned char>& bytes, std::string path)
        : bytes_(bytes), path_(std::move(path)) {}

    std::uint32_t read_u32() {
        require(4);
        std::uint32_t v = (std::uint32_t(bytes_[pos_]) << 24) |
                          (std::uint32_t(bytes_[pos_ + 1]) << 16) |
                          (std::uint32_t(bytes_[pos_ + 2]) << 8) | std::uint32_t(bytes_[pos_ + 3]);
        pos_ += 4;
        return v;
    }

    const unsigned char* read_block(std::size_t n) {
        require(n);
        const unsigned char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::size_t offset() const { return pos_; }

  private:
    void require(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            std::ostringstream msg;
            msg << path_ << ": truncated at byte offset " << pos_ << " (needed " << n
                << " more bytes)";
            throw IoError(msg.str());
        }
    }
    const std::vector<unsigned char>& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void Dataset::validate() const {
    for (const auto& s : samples) {
        if (s.features.size() != feature_dim)
            throw FormatError("dataset: non-uniform feature dimension");
        if (s.label >= n_classes) throw FormatError("dataset: label outside class range");
    }
}

Dataset xor_dataset() {
    Dataset d;
    d.n_classes = 2;
    d.feature_dim = 2;
    d.samples = {{{0.2, 0.2}, 0}, {{0.2, 1.0}, 1}, {{1.0, 0.2}, 1}, {{1.0, 1.0}, 0}};
    Fnv1a h;
    h.update("xor", 3);
    for (const auto& s : d.samples) {
        h.update(s.features.data(), s.features.size() * sizeof(double));
        h.update_u64(s.label);
    }
    d.digest = h.hex();
    return d;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    auto raw_images = read_file_bytes(images_path);
    auto raw_labels = read_file_bytes(labels_path);
    if (is_gzip(raw_images)) raw_images = gunzip(raw_images, images_path);
    if (is_gzip(raw_labels)) raw_labels = gunzip(raw_labels, labels_path);

    BigEndianReader img(raw_images, images_path);
    const std::uint32_t img_magic = img.read_u32();
    if (img_magic != 2051) {
        std::ostringstream msg;
        msg << images_path << ": bad image magic " << img_magic << " (expected 2051)";
        throw FormatError(msg.str());
    }
    const std::uint32_t n_images = img.read_u32();
    const std::uint32_t rows = img.read_u32();
    const std::uint32_t cols = img.read_u32();

    BigEndianReader lab(raw_labels, labels_path);
    const std::uint32_t lab_magic = lab.read_u32();
    if (lab_magic != 2049) {
        std::ostringstream msg;
        msg << labels_path << ": bad label magic " << lab_magic << " (expected 2049)";
        throw FormatError(msg.str());
    }
    const std::uint32_t n_labels = lab.read_u32();
    if (n_images != n_labels) {
        std::ostringstream msg;
        msg << "image/label count mismatch: " << images_path << " has " << n_images << ", "
            << labels_path << " has " << n_labels;
        throw FormatError(msg.str());
    }

    Dataset d;
    d.feature_dim = static_cast<std::size_t>(rows) * cols;
    d.samples.reserve(n_images);
    std::size_t max_label = 0;
    const unsigned char* pixels = img.read_block(d.feature_dim * n_images);
    const unsigned char* labels = lab.read_block(n_labels);
    for (std::uint32_t k = 0; k < n_images; ++k) {
        Sample s;
        s.features.resize(d.feature_dim);
        for (std::size_t p = 0; p < d.feature_dim; ++p)
            s.features[p] = pixels[k * d.feature_dim + p] / 255.0;
        s.label = labels[k];
        max_label = std::max(max_label, s.label);
        d.samples.push_back(std::move(s));
    }
    d.n_classes = max_label + 1;

    Fnv1a hash;
    hash.update(raw_images.data(), raw_images.size());
    hash.update(raw_labels.data(), raw_labels.size());
    d.digest = hash.hex();
    d.validate();
    return d;
}

std::vector<double> max_pool_2x2(const std::vector<double>& features) {
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(features.size()))));
    if (side * side != features.size())
        throw FormatError("max_pool_2x2: feature vector is not a square image");
    if (side % 2 != 0) throw FormatError("max_pool_2x2: image side must be even");
    const std::size_t out_side = side / 2;
    std::vector<double> out(out_side * out_side);
    for (std::size_t r = 0; r < out_side; ++r) {
        for (std::size_t c = 0; c < out_side; ++c) {
            const std::size_t r0 = 2 * r, c0 = 2 * c;
            double m = features[r0 * side + c0];
            m = std::max(m, features[r0 * side + c0 + 1]);
            m = std::max(m, features[(r0 + 1) * side + c0]);
            m = std::max(m, features[(r0 + 1) * side + c0 + 1]);
            out[r * out_side + c] = m;
        }
    }
    return out;
}

Dataset max_pool_dataset(const Dataset& d) {
    Dataset out;
    out.n_classes = d.n_classes;
    out.samples.reserve(d.samples.size());
    for (const auto& s : d.samples) out.samples.push_back({max_pool_2x2(s.features), s.label});
    out.feature_dim = out.samples.empty() ? d.feature_dim / 4 : out.samples[0].features.size();
    Fnv1a h;
    h.update("maxpool2x2", 10);
    h.update(d.digest.data(), d.digest.size());
    out.digest = h.hex();
    return out;
}

std::vector<Sample> sample_batch(const Dataset& dataset, std::size_t n, Rng& rng) {
    if (dataset.samples.empty()) throw ConfigError("sample_batch: dataset is empty");
    if (n < 1) throw ConfigError("sample_batch: n must be >= 1");
    std::vector<Sample> batch;
    batch.reserve(n);
    if (n <= dataset.samples.size()) {
        // partial Fisher-Yates over an index vector
        std::vector<std::size_t> idx(dataset.samples.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t j = k + rng.next_index(idx.size() - k);
            std::swap(idx[k], idx[j]);
            batch.push_back(dataset.samples[idx[k]]);
        }
    } else {
        for (std::size_t k = 0; k < n; ++k)
            batch.push_back(dataset.samples[rng.next_index(dataset.samples.size())]);
    }
    return batch;
}

Dataset class_filter(const Dataset& dataset, const std::vector<std::size_t>& classes) {
    if (classes.empty()) throw ConfigError("class_filter: class list must not be empty");
    std::vector<std::size_t> remap(dataset.n_classes, SIZE_MAX);
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] >= dataset.n_classes)
            throw ConfigError("class_filter: class index outside the dataset range");
        remap[classes[k]] = k;
    }
    Dataset out;
    out.n_classes = classes.size();
    out.feature_dim = dataset.feature_dim;
    std::vector<std::size_t> seen(classes.size(), 0);
    for (const auto& s : dataset.samples) {
        const std::size_t m = remap[s.label];
        if (m == SIZE_MAX) continue;
        ++seen[m];
        out.samples.push_back({s.features, m});
    }
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (seen[k] == 0)
            std::cerr << "warning: class_filter: class " << classes[k]
                      << " has no samples in this dataset\n";
    }
    Fnv1a h;
    h.update(dataset.digest.data(), dataset.digest.size());
    h.update("filter", 6);
    for (std::size_t c : classes) h.update_u64(c);
    out.digest = h.hex();
    return out;
}

}  // namespace optonet
