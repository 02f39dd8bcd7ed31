#include "det6d_cli/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "det6d/error.hpp"

namespace det6d::cli {

std::vector<std::string> list_velodyne_frames(const fs::path& dir) {
  std::vector<std::string> frames;
  const fs::path v = dir / "velodyne";
  if (!fs::is_directory(v)) return frames;
  for (const auto& entry : fs::directory_iterator(v)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      frames.push_back(entry.path().stem().string());
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

fs::path velodyne_path(const fs::path& dir, const std::string& frame) {
  return dir / "velodyne" / (frame + ".bin");
}

fs::path labels_path(const fs::path& dir) { return dir / "labels.jsonl"; }

bool is_kitti_layout(const fs::path& dir) { return fs::is_directory(dir / "label_2"); }

RecordsByFrame read_records(const fs::path& source) {
  RecordsByFrame out;
  fs::path file = source;
  if (fs::is_directory(source)) {
    file = labels_path(source);
    if (!fs::exists(file)) return out;
  }
  for (auto& r : io::read_pose6d(file)) out[r.frame].push_back(std::move(r));
  return out;
}

RecordsByFrame read_kitti_records(const fs::path& label_dir, const fs::path& calib_dir) {
  RecordsByFrame out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(label_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const std::string frame = f.stem().string();
    const io::KittiCalib calib = io::read_kitti_calib(calib_dir / (frame + ".txt"));
    auto& recs = out[frame];
    for (const auto& obj : io::read_kitti_labels(f, calib)) {
      recs.push_back(io::Pose6dRecord::from_box(frame, obj.box, obj.difficulty));
    }
  }
  return out;
}

namespace {

RecordsByFrame records_for(const fs::path& source, const std::optional<fs::path>& calib_dir) {
  if (fs::is_directory(source) && is_kitti_layout(source)) {
    return read_kitti_records(source / "label_2", calib_dir.value_or(source / "calib"));
  }
  return read_records(source);
}

}  // namespace

FrameGts load_ground_truth(const fs::path& dir, const std::optional<fs::path>& calib_dir) {
  FrameGts gts;
  if (fs::is_directory(dir)) {
    for (const auto& f : list_velodyne_frames(dir)) gts[f];
  }
  for (const auto& [frame, recs] : records_for(dir, calib_dir)) {
    auto& boxes = gts[frame];
    for (const auto& r : recs) {
      GtBox g;
      g.box = r.to_box();
      g.box.score.reset();
      if (r.difficulty) g.difficulty = *io::difficulty_from_name(*r.difficulty);
      boxes.push_back(g);
    }
  }
  return gts;
}

Predictions load_predictions(const fs::path& source, const std::optional<fs::path>& calib_dir) {
  Predictions p;
  for (const auto& [frame, recs] : records_for(source, calib_dir)) {
    auto& boxes = p.boxes[frame];
    for (const auto& r : recs) {
      FullPoseBox b = r.to_box();
      if (!b.score) {
        b.score = 1.0;
        ++p.unscored;
      }
      boxes.push_back(b);
    }
  }
  return p;
}

LabeledFrame load_frame(const fs::path& dir, const std::string& frame, const RecordsByFrame& records) {
  LabeledFrame f;
  f.frame_id = frame;
  f.cloud = io::read_velodyne(velodyne_path(dir, frame));
  if (const auto it = records.find(frame); it != records.end()) {
    for (const auto& r : it->second) f.boxes.push_back(r.to_box());
  }
  return f;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace det6d::cli
