#pragma once

#include "tscan/cloud_io.hpp"
#include "tscan/errors.hpp"
#include "tscan/harness/experiments.hpp"
#include "tscan/harness/metrics.hpp"
#include "tscan/harness/ncc.hpp"
#include "tscan/harness/report.hpp"
#include "tscan/image.hpp"
#include "tscan/se3.hpp"
#include "tscan/servo/frame_graph.hpp"
#include "tscan/servo/plant.hpp"
#include "tscan/servo/probe.hpp"
#include "tscan/servo/scan_servo.hpp"
#include "tscan/servo/snapshot.hpp"
#include "tscan/servo/trajectory.hpp"
#include "tscan/sim/motion.hpp"
#include "tscan/sim/phantom.hpp"
#include "tscan/sim/scene.hpp"
#include "tscan/sim/scene_script.hpp"
#include "tscan/sim/ultrasound.hpp"
#include "tscan/surface.hpp"
#include "tscan/tracker/appearance.hpp"
#include "tscan/tracker/config.hpp"
#include "tscan/tracker/kabsch.hpp"
#include "tscan/tracker/ransac.hpp"
#include "tscan/tracker/roi.hpp"
#include "tscan/tracker/segmentation.hpp"
#include "tscan/tracker/tissue_tracker.hpp"
