#pragma once

#include "drnav/binio.hpp"
#include "drnav/sample.hpp"

namespace drnav {

inline constexpr char kDatasetMagic[6] = {'D', 'R', 'N', 'A', 'V', '1'};
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 24;

inline std::size_t dataset_record_bytes(int width, int height)
{
    return 4 + 8 + static_cast<std::size_t>(width * height * 3) + 4 * (kFeatureDim + kLabelDim);
}

inline std::vector<std::uint8_t> serialize_dataset(const Dataset& d)
{
    ByteWriter w;
    w.bytes(kDatasetMagic, 6);
    w.uint<std::uint16_t>(kDatasetVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(d.width));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(d.height));
    w.uint<std::uint64_t>(d.size());
    const std::size_t image_bytes = static_cast<std::size_t>(d.width * d.height * 3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.samples[i];
        if (s.image.size() != image_bytes) throw Error("dataset: record " + std::to_string(i) + " has the wrong image size");
        w.uint<std::uint32_t>(s.episode);
        w.f64(s.timestamp);
        w.bytes(s.image.data(), s.image.size());
        for (float f : s.features) w.f32(f);
        for (float f : s.label) w.f32(f);
    }
    return w.data();
}

inline Dataset deserialize_dataset(std::vector<std::uint8_t> bytes)
{
    ByteReader r(std::move(bytes));
    if (!r.has(kDatasetHeaderBytes)) throw Error("dataset: truncated header");
    char magic[6];
    r.bytes(magic, 6);
    if (std::memcmp(magic, kDatasetMagic, 6) != 0) throw Error("dataset: bad magic");
    if (r.uint<std::uint16_t>() != kDatasetVersion) throw Error("dataset: unsupported version");
    Dataset d;
    d.width = static_cast<int>(r.uint<std::uint32_t>());
    d.height = static_cast<int>(r.uint<std::uint32_t>());
    const auto count = r.uint<std::uint64_t>();
    if (d.width < 1 || d.height < 1 || d.width > 4096 || d.height > 4096) throw Error("dataset: bad image size");
    const std::size_t rec = dataset_record_bytes(d.width, d.height);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (!r.has(rec)) throw Error("dataset: truncated record " + std::to_string(i));
        TrainingSample s;
        s.episode = r.uint<std::uint32_t>();
        s.timestamp = r.f64();
        s.image.resize(static_cast<std::size_t>(d.width * d.height * 3));
        r.bytes(s.image.data(), s.image.size());
        for (float& f : s.features) f = r.f32();
        for (float& f : s.label) f = r.f32();
        d.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0) throw Error("dataset: trailing bytes after record " + std::to_string(count));
    return d;
}

inline void write_dataset(const std::string& path, const Dataset& d)
{
    const auto bytes = serialize_dataset(d);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

inline Dataset read_dataset(const std::string& path)
{
    try {
        return deserialize_dataset(read_file(path));
    } catch (const Error& e) {
        throw Error(std::string(e.what()) + " (" + path + ")");
    }
}

}  // namespace drnav
