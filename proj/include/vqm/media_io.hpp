#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vqm/field.hpp"

namespace vqm {

// One stereo video: a pair of raw planar YUV420P files plus metadata and an
// optional subjective quality label. Only 8-bit input is supported.
struct VideoManifestEntry {
    std::string id;
    std::string left_path;
    std::string right_path;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    int frame_count = 0;
    std::optional<double> dmos;
    std::string distortion_tag;

    // Source-scene group used by content-level splits: the id up to the
    // first '.', or the whole id when there is none.
    std::string content_group() const;
};

// Time-aligned pair of left/right luma planes.
struct StereoFramePair {
    int index = 0;
    LumaPlane left;
    LumaPlane right;
};

// Parses and validates a manifest file. Format (UTF-8 text): header line
// "vquemodes-manifest v1", then one tab-separated record per line:
//   id left_path right_path width height fps frame_count dmos distortion_tag
// dmos is "-" when absent. Relative paths resolve against the manifest's
// directory. frame_count may be smaller than what the file holds; it acts
// as a per-entry frame limit.
std::vector<VideoManifestEntry> load_manifest(const std::string& path);

// Writes entries in the same format (used by the synthetic generator).
void save_manifest(const std::string& path, const std::vector<VideoManifestEntry>& entries);

// Reads the luma planes of frame `index` from both views. Chroma bytes are
// skipped by plane offset arithmetic. Stateless: concurrent reads of
// distinct frames from one entry are safe.
StereoFramePair read_frame_pair(const VideoManifestEntry& entry, int index);

// Writes one YUV420P frame (luma plus flat chroma at 128) to an open stream
// position; helper shared by the generator and test fixtures.
void append_yuv420_frame(std::ofstream& out, const LumaPlane& luma);

} // namespace vqm
