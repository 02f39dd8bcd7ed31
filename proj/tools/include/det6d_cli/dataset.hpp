#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "det6d/eval.hpp"
#include "det6d/io.hpp"
#include "det6d/slopeaug.hpp"

// On-disk dataset layouts understood by the command-line tools.
//
// Native:  DIR/velodyne/<frame>.bin  and  DIR/labels.jsonl (pose6d records)
// KITTI:   DIR/label_2/<frame>.txt   and  DIR/calib/<frame>.txt
namespace det6d::cli {

namespace fs = std::filesystem;

using RecordsByFrame = std::map<std::string, std::vector<io::Pose6dRecord>>;

std::vector<std::string> list_velodyne_frames(const fs::path& dir);
fs::path velodyne_path(const fs::path& dir, const std::string& frame);
fs::path labels_path(const fs::path& dir);

bool is_kitti_layout(const fs::path& dir);

/// Records grouped by frame. `source` is a pose6d file or a native dataset
/// directory (missing labels file means no boxes).
RecordsByFrame read_records(const fs::path& source);

/// KITTI label_2 rows converted to records; calibration per frame comes
/// from `calib_dir`.
RecordsByFrame read_kitti_records(const fs::path& label_dir, const fs::path& calib_dir);

/// Ground truth from either layout. Frames with a point cloud but no
/// labels are present with no boxes.
FrameGts load_ground_truth(const fs::path& dir, const std::optional<fs::path>& calib_dir = {});

struct Predictions {
  FrameBoxes boxes;
  std::size_t unscored = 0;  // records without a score, given score 1
};

Predictions load_predictions(const fs::path& source, const std::optional<fs::path>& calib_dir = {});

/// Cloud plus boxes for one native frame.
LabeledFrame load_frame(const fs::path& dir, const std::string& frame, const RecordsByFrame& records);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace det6d::cli
