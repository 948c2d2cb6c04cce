#include "tensor_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace glupruner {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "safetensors payloads are read in place as little-endian");

namespace {

constexpr std::size_t kHeaderLengthBytes = 8;
// Upstream safetensors refuses headers above 100 MB.
constexpr std::uint64_t kMaxHeaderBytes = 100'000'000;

enum class Dtype { F32, F16, BF16 };

std::size_t dtype_size(Dtype d) { return d == Dtype::F32 ? 4 : 2; }

struct Entry {
    std::string name;
    Dtype dtype;
    std::size_t rows;
    std::size_t cols;
    std::uint64_t begin;
    std::uint64_t end;
};

std::uint64_t read_u64_le(std::span<const std::uint8_t> bytes) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
}

void append_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

Dtype parse_dtype(const std::string& name, const json& value) {
    if (!value.is_string()) fail(ErrorCode::Format, "tensor '" + name + "': dtype is not a string");
    const auto s = value.get<std::string>();
    if (s == "F32") return Dtype::F32;
    if (s == "F16") return Dtype::F16;
    if (s == "BF16") return Dtype::BF16;
    fail(ErrorCode::UnsupportedDtype, "tensor '" + name + "': unsupported dtype " + s);
}

std::uint64_t parse_u64(const std::string& name, const json& value, const char* what) {
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        fail(ErrorCode::Format, "tensor '" + name + "': " + what + " must be a nonnegative integer");
    }
    return value.get<std::uint64_t>();
}

Entry parse_entry(const std::string& name, const json& value) {
    if (name.empty()) fail(ErrorCode::Format, "tensor with empty name");
    if (!value.is_object()) fail(ErrorCode::Format, "tensor '" + name + "': entry is not an object");
    for (const char* key : {"dtype", "shape", "data_offsets"}) {
        if (!value.contains(key)) {
            fail(ErrorCode::Format, "tensor '" + name + "': missing field " + key);
        }
    }
    Entry e{name, parse_dtype(name, value["dtype"]), 0, 0, 0, 0};

    const json& shape = value["shape"];
    if (!shape.is_array()) fail(ErrorCode::Format, "tensor '" + name + "': shape is not an array");
    std::vector<std::uint64_t> dims;
    for (const auto& d : shape) dims.push_back(parse_u64(name, d, "shape entry"));
    if (dims.size() == 1) {
        e.rows = 1;
        e.cols = dims[0];
    } else if (dims.size() == 2) {
        e.rows = dims[0];
        e.cols = dims[1];
    } else {
        fail(ErrorCode::UnsupportedShape, "tensor '" + name + "': " + std::to_string(dims.size()) +
                                              "-D tensors are not supported (need 1-D or 2-D)");
    }
    if (e.rows == 0 || e.cols == 0) {
        fail(ErrorCode::UnsupportedShape, "tensor '" + name + "': zero-sized dimension");
    }

    const json& offsets = value["data_offsets"];
    if (!offsets.is_array() || offsets.size() != 2) {
        fail(ErrorCode::Format, "tensor '" + name + "': data_offsets must be [begin, end]");
    }
    e.begin = parse_u64(name, offsets[0], "data_offsets");
    e.end = parse_u64(name, offsets[1], "data_offsets");
    if (e.end < e.begin) fail(ErrorCode::Format, "tensor '" + name + "': data_offsets end < begin");

    // Overflow-safe check that the byte span matches the element count.
    const std::uint64_t elems = static_cast<std::uint64_t>(e.rows);
    if (elems != 0 && e.cols > std::numeric_limits<std::uint64_t>::max() / elems / 4) {
        fail(ErrorCode::Format, "tensor '" + name + "': shape too large");
    }
    if (e.end - e.begin != elems * e.cols * dtype_size(e.dtype)) {
        fail(ErrorCode::Format, "tensor '" + name + "': data_offsets span does not match shape and dtype");
    }
    return e;
}

Tensor2D decode_payload(const Entry& e, std::span<const std::uint8_t> payload) {
    const std::size_t count = e.rows * e.cols;
    std::vector<float> data(count);
    const std::uint8_t* src = payload.data() + e.begin;
    switch (e.dtype) {
    case Dtype::F32:
        std::memcpy(data.data(), src, count * 4);
        break;
    case Dtype::F16:
    case Dtype::BF16:
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t bits;
            std::memcpy(&bits, src + 2 * i, 2);
            data[i] = e.dtype == Dtype::F16 ? half_to_float(bits) : bfloat16_to_float(bits);
        }
        break;
    }
    for (float v : data) {
        if (!std::isfinite(v)) fail(ErrorCode::Data, "tensor '" + e.name + "' contains NaN or Inf");
    }
    return Tensor2D(e.rows, e.cols, std::move(data));
}

} // namespace

void TensorFile::put(const std::string& name, Tensor2D tensor) {
    if (name.empty()) fail(ErrorCode::Format, "tensor names must be non-empty");
    entries.insert_or_assign(name, std::move(tensor));
}

const Tensor2D& TensorFile::get(const std::string& name) const {
    const auto it = entries.find(name);
    if (it == entries.end()) fail(ErrorCode::Format, "tensor '" + name + "' not found");
    return it->second;
}

float half_to_float(std::uint16_t bits) {
    const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
    const std::uint32_t exponent = (bits >> 10) & 0x1Fu;
    std::uint32_t mantissa = bits & 0x3FFu;
    std::uint32_t out;
    if (exponent == 0) {
        if (mantissa == 0) {
            out = sign;
        } else {
            // Subnormal: renormalize into the f32 range.
            int shift = 0;
            while ((mantissa & 0x400u) == 0) {
                mantissa <<= 1;
                ++shift;
            }
            mantissa &= 0x3FFu;
            out = sign | (static_cast<std::uint32_t>(127 - 15 - shift + 1) << 23) | (mantissa << 13);
        }
    } else if (exponent == 0x1F) {
        out = sign | 0x7F800000u | (mantissa << 13);
    } else {
        out = sign | ((exponent + (127 - 15)) << 23) | (mantissa << 13);
    }
    return std::bit_cast<float>(out);
}

float bfloat16_to_float(std::uint16_t bits) {
    return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
}

TensorFile parse_tensor_file(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderLengthBytes) {
        fail(ErrorCode::Format, "file shorter than the 8-byte header length field");
    }
    const std::uint64_t header_len = read_u64_le(bytes);
    if (header_len > kMaxHeaderBytes || header_len > bytes.size() - kHeaderLengthBytes) {
        fail(ErrorCode::Format, "header length " + std::to_string(header_len) + " exceeds file size");
    }
    const auto header_bytes = bytes.subspan(kHeaderLengthBytes, header_len);
    const auto payload = bytes.subspan(kHeaderLengthBytes + header_len);

    json header = json::parse(header_bytes.begin(), header_bytes.end(), nullptr, false);
    if (header.is_discarded()) fail(ErrorCode::Format, "header is not valid JSON");
    if (!header.is_object()) fail(ErrorCode::Format, "header is not a JSON object");

    TensorFile tf;
    std::vector<Entry> entries;
    for (const auto& [key, value] : header.items()) {
        if (key == "__metadata__") {
            if (!value.is_object()) fail(ErrorCode::Format, "__metadata__ is not an object");
            for (const auto& [mk, mv] : value.items()) {
                if (!mv.is_string()) fail(ErrorCode::Format, "__metadata__ value for '" + mk + "' is not a string");
                tf.metadata.emplace(mk, mv.get<std::string>());
            }
            continue;
        }
        entries.push_back(parse_entry(key, value));
    }

    std::vector<const Entry*> by_offset;
    for (const auto& e : entries) by_offset.push_back(&e);
    std::sort(by_offset.begin(), by_offset.end(),
              [](const Entry* a, const Entry* b) { return a->begin < b->begin; });
    for (std::size_t i = 0; i < by_offset.size(); ++i) {
        const Entry& e = *by_offset[i];
        if (e.end > payload.size()) {
            fail(ErrorCode::Format, "tensor '" + e.name + "': data_offsets out of bounds");
        }
        if (i > 0 && by_offset[i - 1]->end > e.begin) {
            fail(ErrorCode::Format, "tensors '" + by_offset[i - 1]->name + "' and '" + e.name +
                                        "' have overlapping data_offsets");
        }
    }

    for (const auto& e : entries) tf.entries.emplace(e.name, decode_payload(e, payload));
    return tf;
}

std::vector<std::uint8_t> serialize_tensor_file(const TensorFile& tf) {
    json header = json::object();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tf.entries) {
        if (name.empty()) fail(ErrorCode::Format, "tensor names must be non-empty");
        const std::uint64_t bytes = static_cast<std::uint64_t>(t.size()) * 4;
        header[name] = {{"dtype", "F32"},
                        {"shape", {t.rows(), t.cols()}},
                        {"data_offsets", {offset, offset + bytes}}};
        offset += bytes;
    }
    if (!tf.metadata.empty()) header["__metadata__"] = tf.metadata;

    std::string text = header.dump();
    // Pad with spaces so the payload starts 8-byte aligned.
    text.append((8 - text.size() % 8) % 8, ' ');

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderLengthBytes + text.size() + offset);
    append_u64_le(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& [name, t] : tf.entries) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(t.data().data());
        out.insert(out.end(), p, p + t.size() * 4);
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) fail(ErrorCode::Io, "cannot determine size of " + path.string());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (!bytes.empty() && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        fail(ErrorCode::Io, "failed reading " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

TensorFile load_tensor_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_tensor_file(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_tensor_file(const TensorFile& tf, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_tensor_file(tf));
}

} // namespace glupruner
