#include "vqm/media_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace vqm {

std::string VideoManifestEntry::content_group() const {
    auto pos = id.find('.');
    return pos == std::string::npos ? id : id.substr(0, pos);
}

namespace {

constexpr const char* kManifestHeader = "vquemodes-manifest v1";

uint64_t file_size_or_throw(const std::string& path, const std::string& ctx) {
    std::error_code ec;
    auto sz = fs::file_size(path, ec);
    if (ec) throw ValidationError(ctx + ": missing video file '" + path + "'");
    return static_cast<uint64_t>(sz);
}

size_t frame_bytes(const VideoManifestEntry& e) {
    return static_cast<size_t>(e.width) * e.height * 3 / 2;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == '\t') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

void validate_entry(const VideoManifestEntry& e, const std::string& ctx) {
    if (e.width <= 0 || e.height <= 0)
        throw ValidationError(ctx + ": dimensions must be positive");
    if (e.width % 2 != 0 || e.height % 2 != 0)
        throw ValidationError(ctx + ": dimensions must be even");
    if (e.frame_count <= 0)
        throw ValidationError(ctx + ": frame_count must be positive");
    if (e.dmos && !std::isfinite(*e.dmos))
        throw ValidationError(ctx + ": dmos must be finite");
    const uint64_t need = static_cast<uint64_t>(e.frame_count) * frame_bytes(e);
    for (const auto& p : {e.left_path, e.right_path}) {
        uint64_t have = file_size_or_throw(p, ctx);
        if (have < need) {
            throw ValidationError(ctx + ": file '" + p + "' holds " + std::to_string(have) +
                                  " bytes, need " + std::to_string(need) + " for " +
                                  std::to_string(e.frame_count) + " frames");
        }
    }
}

} // namespace

std::vector<VideoManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest '" + path + "'");
    const fs::path base = fs::path(path).parent_path();

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("manifest '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader)
        throw ValidationError("manifest '" + path + "': unexpected header '" + line + "'");

    std::vector<VideoManifestEntry> entries;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string ctx = path + ":" + std::to_string(lineno);
        auto fields = split_tabs(line);
        if (fields.size() != 9)
            throw ValidationError(ctx + ": expected 9 tab-separated fields, got " +
                                  std::to_string(fields.size()));
        VideoManifestEntry e;
        e.id = fields[0];
        if (e.id.empty()) throw ValidationError(ctx + ": empty id");
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        e.left_path = resolve(fields[1]);
        e.right_path = resolve(fields[2]);
        try {
            e.width = std::stoi(fields[3]);
            e.height = std::stoi(fields[4]);
            e.fps = std::stod(fields[5]);
            e.frame_count = std::stoi(fields[6]);
            if (fields[7] != "-") e.dmos = std::stod(fields[7]);
        } catch (const std::exception&) {
            throw ValidationError(ctx + ": malformed numeric field");
        }
        e.distortion_tag = fields[8];
        validate_entry(e, ctx);
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_manifest(const std::string& path, const std::vector<VideoManifestEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write manifest '" + path + "'");
    out << kManifestHeader << "\n";
    char buf[64];
    for (const auto& e : entries) {
        std::string dmos = "-";
        if (e.dmos) {
            std::snprintf(buf, sizeof(buf), "%.9g", *e.dmos);
            dmos = buf;
        }
        std::snprintf(buf, sizeof(buf), "%.9g", e.fps);
        out << e.id << '\t' << e.left_path << '\t' << e.right_path << '\t' << e.width << '\t'
            << e.height << '\t' << buf << '\t' << e.frame_count << '\t' << dmos << '\t'
            << e.distortion_tag << "\n";
    }
    if (!out) throw RuntimeFailure("write failed for manifest '" + path + "'");
}

namespace {

LumaPlane read_luma(const std::string& path, const VideoManifestEntry& e, int index) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open '" + path + "'");
    const uint64_t offset = static_cast<uint64_t>(index) * frame_bytes(e);
    in.seekg(static_cast<std::streamoff>(offset));
    LumaPlane plane(e.height, e.width);
    in.read(reinterpret_cast<char*>(plane.data.data()),
            static_cast<std::streamsize>(plane.data.size()));
    if (!in)
        throw RuntimeFailure("short read in '" + path + "' at frame " + std::to_string(index));
    return plane;
}

} // namespace

StereoFramePair read_frame_pair(const VideoManifestEntry& entry, int index) {
    if (index < 0 || index >= entry.frame_count)
        throw ValidationError("frame index " + std::to_string(index) + " out of range [0, " +
                              std::to_string(entry.frame_count) + ") for '" + entry.id + "'");
    StereoFramePair pair;
    pair.index = index;
    pair.left = read_luma(entry.left_path, entry, index);
    pair.right = read_luma(entry.right_path, entry, index);
    return pair;
}

void append_yuv420_frame(std::ofstream& out, const LumaPlane& luma) {
    out.write(reinterpret_cast<const char*>(luma.data.data()),
              static_cast<std::streamsize>(luma.data.size()));
    std::vector<char> chroma(static_cast<size_t>(luma.rows / 2) * (luma.cols / 2), char(128));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size())); // U
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size())); // V
}

} // namespace vqm
