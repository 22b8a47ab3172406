#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/image.hpp"
#include "mfeo/image_io.hpp"
#include "mfeo/parallel.hpp"

namespace mfeo::data {

struct EmotionClass {
    int id = 0;
    std::string name;
};

struct LabeledSample {
    std::string sequence_id;
    std::string subject_id;
    GrayImage neutral;  // first frame of the sequence
    GrayImage apex;     // last frame
    int label = 0;
};

struct RowError {
    std::string sequence_id;
    std::string message;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    std::vector<EmotionClass> classes;  // ids dense 0..K-1, names sorted
    std::vector<RowError> errors;

    const std::string& class_name(int id) const { return classes[static_cast<std::size_t>(id)].name; }
};

namespace detail {

struct LabelsRow {
    std::string sequence_id;
    std::string subject_id;
    std::string label;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline std::vector<LabelsRow> parse_labels(const std::string& labels_path) {
    std::ifstream in(labels_path);
    if (!in) throw DataError("cannot open labels file: " + labels_path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset: labels file has no header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "sequence_id" || header[1] != "subject_id" ||
        header[2] != "label") {
        throw DataError("labels header must be 'sequence_id,subject_id,label': " + labels_path);
    }
    std::vector<LabelsRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3 || cells[0].empty() || cells[2].empty()) {
            throw DataError("malformed labels row: '" + line + "'");
        }
        rows.push_back({cells[0], cells[1], cells[2]});
    }
    if (rows.empty()) throw DataError("empty dataset");
    return rows;
}

inline std::vector<std::string> sequence_frames(const std::filesystem::path& dir) {
    std::vector<std::string> frames;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm") frames.push_back(entry.path().string());
    }
    std::sort(frames.begin(), frames.end());
    return frames;
}

}  // namespace detail

// Layout: root/<sequence_id>/frame_*.{png,pgm} plus labels.csv with header
// sequence_id,subject_id,label. Neutral = first frame, apex = last frame,
// both resized to working_size x working_size. Per-row failures are recorded,
// not fatal; row order of the output matches the labels file.
inline Dataset load_dataset(const std::string& root_path, const std::string& labels_path,
                            int working_size = 96) {
    const auto rows = detail::parse_labels(labels_path);

    // dense class ids from sorted unique label names
    std::map<std::string, int> class_ids;
    for (const auto& row : rows) class_ids.emplace(row.label, 0);
    if (class_ids.size() < 2) throw DataError("dataset must contain at least 2 classes");
    Dataset ds;
    int next_id = 0;
    for (auto& [name, id] : class_ids) {
        id = next_id++;
        ds.classes.push_back({id, name});
    }

    struct Slot {
        bool ok = false;
        LabeledSample sample;
        std::string error;
    };
    std::vector<Slot> slots(rows.size());
    const std::filesystem::path root(root_path);

    parallel_for(rows.size(), [&](std::size_t i) {
        const auto& row = rows[i];
        Slot& slot = slots[i];
        try {
            const auto dir = root / row.sequence_id;
            if (!std::filesystem::is_directory(dir)) {
                throw DataError("missing sequence directory: " + dir.string());
            }
            const auto frames = detail::sequence_frames(dir);
            if (frames.size() < 2) {
                throw DataError("sequence needs at least 2 frames, found " +
                                std::to_string(frames.size()));
            }
            LabeledSample s;
            s.sequence_id = row.sequence_id;
            s.subject_id = row.subject_id;
            s.label = class_ids.at(row.label);
            s.neutral = resize_bilinear(load_image(frames.front()), working_size, working_size);
            s.apex = resize_bilinear(load_image(frames.back()), working_size, working_size);
            if (s.neutral.width != s.apex.width || s.neutral.height != s.apex.height) {
                throw DataError("neutral/apex dimension mismatch");
            }
            if (!s.neutral.valid() || !s.apex.valid()) {
                throw DataError("frame failed image invariants after load");
            }
            slot.sample = std::move(s);
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].ok) {
            ds.samples.push_back(std::move(slots[i].sample));
        } else {
            ds.errors.push_back({rows[i].sequence_id, slots[i].error});
        }
    }
    return ds;
}

}  // namespace mfeo::data
