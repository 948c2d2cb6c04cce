#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace glupruner {

// Named 2-D tensors plus the optional "__metadata__" string map of a
// safetensors container. std::map keeps names sorted, which fixes the
// on-disk order and makes saves byte-reproducible.
struct TensorFile {
    std::map<std::string, Tensor2D> entries;
    std::map<std::string, std::string> metadata;

    void put(const std::string& name, Tensor2D tensor);
    const Tensor2D& get(const std::string& name) const;
    bool contains(const std::string& name) const { return entries.contains(name); }

    friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

TensorFile parse_tensor_file(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_tensor_file(const TensorFile& tf);

TensorFile load_tensor_file(const std::filesystem::path& path);
void save_tensor_file(const TensorFile& tf, const std::filesystem::path& path);

float half_to_float(std::uint16_t bits);
float bfloat16_to_float(std::uint16_t bits);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace glupruner
