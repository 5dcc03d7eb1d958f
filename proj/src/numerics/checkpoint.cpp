#include "arforge/numerics/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arforge::numerics {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path &prefix, const char *suffix) {
    return std::filesystem::path(prefix.string() + suffix);
}

std::uint64_t to_little_endian(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t out = 0;
        for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFF) << (8 * (7 - i));
        return out;
    }
    return bits;
}

} // namespace

void save_checkpoint(const std::filesystem::path &prefix, const std::vector<NamedTensor> &tensors) {
    std::ofstream manifest(with_suffix(prefix, ".manifest"), std::ios::binary);
    std::ofstream blob(with_suffix(prefix, ".bin"), std::ios::binary);
    if (!manifest || !blob) throw std::runtime_error("checkpoint: cannot write " + prefix.string());
    for (const auto &[name, tensor] : tensors) {
        if (name.find_first_of("\t\n") != std::string::npos)
            throw std::invalid_argument("checkpoint: tensor name contains tab or newline: " + name);
        manifest << name << '\t';
        for (std::size_t i = 0; i < tensor.rank(); ++i) manifest << (i ? "," : "") << tensor.dim(i);
        manifest << "\tf64\n";
        for (double v : tensor.values()) {
            const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
            blob.write(reinterpret_cast<const char *>(&bits), sizeof bits);
        }
    }
    if (!manifest || !blob) throw std::runtime_error("checkpoint: write failed for " + prefix.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path &prefix) {
    std::ifstream manifest(with_suffix(prefix, ".manifest"));
    std::ifstream blob(with_suffix(prefix, ".bin"), std::ios::binary);
    if (!manifest || !blob) throw std::runtime_error("checkpoint: cannot read " + prefix.string());
    std::vector<NamedTensor> out;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos || line.substr(tab2 + 1) != "f64")
            throw std::runtime_error("checkpoint: malformed manifest line: " + line);
        Shape shape;
        std::stringstream dims(line.substr(tab1 + 1, tab2 - tab1 - 1));
        std::string dim;
        while (std::getline(dims, dim, ',')) shape.push_back(std::stoul(dim));
        std::vector<double> values(shape_size(shape));
        for (double &v : values) {
            std::uint64_t bits = 0;
            if (!blob.read(reinterpret_cast<char *>(&bits), sizeof bits))
                throw std::runtime_error("checkpoint: blob shorter than manifest for " + prefix.string());
            v = std::bit_cast<double>(to_little_endian(bits));
        }
        out.push_back({line.substr(0, tab1), Tensor::from_values(std::move(shape), std::move(values))});
    }
    if (blob.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("checkpoint: blob longer than manifest for " + prefix.string());
    return out;
}

} // namespace arforge::numerics
