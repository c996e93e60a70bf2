#include "foldgen/garment.hpp"

namespace foldgen {

namespace {

KeypointTemplate make_tshirt() {
    KeypointTemplate t;
    t.category = Category::TShirt;
    t.scale_min = 0.40;
    t.scale_max = 0.50;
    t.keypoints = {
        {"neck_left", {-0.08, 0.60}, {0.012, 0.012}},
        {"neck_right", {0.08, 0.60}, {0.012, 0.012}},
        {"shoulder_left", {-0.26, 0.58}, {0.02, 0.015}},
        {"shoulder_right", {0.26, 0.58}, {0.02, 0.015}},
        {"sleeve_left_outer", {-0.40, 0.38}, {0.02, 0.02}},
        {"sleeve_left_inner", {-0.32, 0.28}, {0.02, 0.02}},
        {"armpit_left", {-0.215, 0.40}, {0.015, 0.015}},
        {"armpit_right", {0.215, 0.40}, {0.015, 0.015}},
        {"sleeve_right_inner", {0.32, 0.28}, {0.02, 0.02}},
        {"sleeve_right_outer", {0.40, 0.38}, {0.02, 0.02}},
        {"bottom_left", {-0.24, 0.0}, {0.02, 0.015}},
        {"bottom_right", {0.24, 0.0}, {0.02, 0.015}},
    };
    t.curves = {
        {"neck_left", "shoulder_left", {}, "shoulder_seam_left"},
        {"shoulder_left", "sleeve_left_outer", {{-0.01, 0.012}}, "sleeve_top_left"},
        {"sleeve_left_outer", "sleeve_left_inner", {}, "sleeve_end_left"},
        {"sleeve_left_inner", "armpit_left", {}, "sleeve_under_left"},
        {"armpit_left", "bottom_left", {{0.012, 0.0}}, "side_left"},
        {"bottom_left", "bottom_right", {}, "bottom"},
        {"bottom_right", "armpit_right", {{-0.012, 0.0}}, "side_right"},
        {"armpit_right", "sleeve_right_inner", {}, "sleeve_under_right"},
        {"sleeve_right_inner", "sleeve_right_outer", {}, "sleeve_end_right"},
        {"sleeve_right_outer", "shoulder_right", {{0.01, 0.012}}, "sleeve_top_right"},
        {"shoulder_right", "neck_right", {}, "shoulder_seam_right"},
        {"neck_right", "neck_left", {{0.0, -0.055}, {0.0, -0.055}}, "neck"},
    };
    t.openings = {"neck", "sleeve_end_left", "sleeve_end_right", "bottom"};
    return t;
}

KeypointTemplate make_vest() {
    KeypointTemplate t;
    t.category = Category::Vest;
    t.scale_min = 0.40;
    t.scale_max = 0.55;
    t.keypoints = {
        {"neck_left", {-0.085, 0.62}, {0.012, 0.012}},
        {"neck_center", {0.0, 0.565}, {0.01, 0.012}},
        {"neck_right", {0.085, 0.62}, {0.012, 0.012}},
        {"shoulder_left", {-0.20, 0.60}, {0.018, 0.015}},
        {"shoulder_right", {0.20, 0.60}, {0.018, 0.015}},
        {"armpit_left", {-0.24, 0.38}, {0.018, 0.018}},
        {"armpit_right", {0.24, 0.38}, {0.018, 0.018}},
        {"bottom_left", {-0.23, 0.0}, {0.02, 0.015}},
        {"bottom_center", {0.0, -0.015}, {0.015, 0.012}},
        {"bottom_right", {0.23, 0.0}, {0.02, 0.015}},
    };
    t.curves = {
        {"neck_left", "shoulder_left", {}, "shoulder_seam_left"},
        {"shoulder_left", "armpit_left", {{0.03, 0.0}}, "armhole_left"},
        {"armpit_left", "bottom_left", {{0.01, 0.0}}, "side_left"},
        {"bottom_left", "bottom_center", {}, "bottom"},
        {"bottom_center", "bottom_right", {}, "bottom"},
        {"bottom_right", "armpit_right", {{-0.01, 0.0}}, "side_right"},
        {"armpit_right", "shoulder_right", {{-0.03, 0.0}}, "armhole_right"},
        {"shoulder_right", "neck_right", {}, "shoulder_seam_right"},
        {"neck_right", "neck_center", {{-0.012, -0.02}}, "neck"},
        {"neck_center", "neck_left", {{0.012, -0.02}}, "neck"},
    };
    t.openings = {"neck", "armhole_left", "armhole_right", "bottom"};
    return t;
}

KeypointTemplate make_hoodie() {
    KeypointTemplate t;
    t.category = Category::Hoodie;
    t.scale_min = 0.45;
    t.scale_max = 0.60;
    t.keypoints = {
        {"neck_left", {-0.095, 0.60}, {0.012, 0.012}},
        {"neck_right", {0.095, 0.60}, {0.012, 0.012}},
        {"hood_left", {-0.09, 0.74}, {0.015, 0.015}},
        {"hood_right", {0.09, 0.74}, {0.015, 0.015}},
        {"shoulder_left", {-0.27, 0.58}, {0.02, 0.015}},
        {"shoulder_right", {0.27, 0.58}, {0.02, 0.015}},
        {"sleeve_left_outer", {-0.42, 0.36}, {0.02, 0.02}},
        {"sleeve_left_inner", {-0.33, 0.26}, {0.02, 0.02}},
        {"armpit_left", {-0.225, 0.39}, {0.015, 0.015}},
        {"armpit_right", {0.225, 0.39}, {0.015, 0.015}},
        {"sleeve_right_inner", {0.33, 0.26}, {0.02, 0.02}},
        {"sleeve_right_outer", {0.42, 0.36}, {0.02, 0.02}},
        {"bottom_left", {-0.25, 0.0}, {0.02, 0.015}},
        {"bottom_right", {0.25, 0.0}, {0.02, 0.015}},
    };
    t.curves = {
        {"neck_left", "shoulder_left", {}, "shoulder_seam_left"},
        {"shoulder_left", "sleeve_left_outer", {{-0.01, 0.012}}, "sleeve_top_left"},
        {"sleeve_left_outer", "sleeve_left_inner", {}, "sleeve_end_left"},
        {"sleeve_left_inner", "armpit_left", {}, "sleeve_under_left"},
        {"armpit_left", "bottom_left", {{0.012, 0.0}}, "side_left"},
        {"bottom_left", "bottom_right", {}, "bottom"},
        {"bottom_right", "armpit_right", {{-0.012, 0.0}}, "side_right"},
        {"armpit_right", "sleeve_right_inner", {}, "sleeve_under_right"},
        {"sleeve_right_inner", "sleeve_right_outer", {}, "sleeve_end_right"},
        {"sleeve_right_outer", "shoulder_right", {{0.01, 0.012}}, "sleeve_top_right"},
        {"shoulder_right", "neck_right", {}, "shoulder_seam_right"},
        {"neck_right", "hood_right", {{0.015, 0.0}}, "hood_side_right"},
        {"hood_right", "hood_left", {{0.0, 0.045}, {0.0, 0.045}}, "hood_top"},
        {"hood_left", "neck_left", {{-0.015, 0.0}}, "hood_side_left"},
    };
    t.openings = {"hood_top", "sleeve_end_left", "sleeve_end_right", "bottom"};
    return t;
}

KeypointTemplate make_trousers() {
    KeypointTemplate t;
    t.category = Category::Trousers;
    t.scale_min = 0.45;
    t.scale_max = 0.65;
    t.keypoints = {
        {"waist_left", {-0.18, 0.60}, {0.015, 0.012}},
        {"waist_center", {0.0, 0.615}, {0.012, 0.012}},
        {"waist_right", {0.18, 0.60}, {0.015, 0.012}},
        {"crotch", {0.0, 0.32}, {0.012, 0.018}},
        {"leg_left_outer", {-0.20, 0.0}, {0.018, 0.015}},
        {"leg_left_inner", {-0.07, 0.0}, {0.015, 0.015}},
        {"leg_right_inner", {0.07, 0.0}, {0.015, 0.015}},
        {"leg_right_outer", {0.20, 0.0}, {0.018, 0.015}},
    };
    t.curves = {
        {"waist_left", "leg_left_outer", {{0.008, 0.0}}, "side_left"},
        {"leg_left_outer", "leg_left_inner", {}, "leg_end_left"},
        {"leg_left_inner", "crotch", {{-0.012, 0.0}}, "inseam_left"},
        {"crotch", "leg_right_inner", {{0.012, 0.0}}, "inseam_right"},
        {"leg_right_inner", "leg_right_outer", {}, "leg_end_right"},
        {"leg_right_outer", "waist_right", {{-0.008, 0.0}}, "side_right"},
        {"waist_right", "waist_center", {}, "waist"},
        {"waist_center", "waist_left", {}, "waist"},
    };
    t.openings = {"waist", "leg_end_left", "leg_end_right"};
    return t;
}

}  // namespace

KeypointTemplate builtin_template(Category category) {
    KeypointTemplate t;
    switch (category) {
        case Category::TShirt: t = make_tshirt(); break;
        case Category::Vest: t = make_vest(); break;
        case Category::Hoodie: t = make_hoodie(); break;
        case Category::Trousers: t = make_trousers(); break;
    }
    t.validate();
    return t;
}

}  // namespace foldgen
