#include "photonpano/error.hpp"

namespace photonpano {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::argument: return "argument";
        case ErrorKind::format: return "format";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
        case ErrorKind::overlap: return "overlap";
        case ErrorKind::degeneracy: return "degeneracy";
        case ErrorKind::simulation: return "simulation";
        case ErrorKind::pipeline: return "pipeline";
        case ErrorKind::render: return "render";
        case ErrorKind::evaluation: return "evaluation";
    }
    return "unknown";
}

}  // namespace photonpano
