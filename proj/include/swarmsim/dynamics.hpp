#pragma once

#include "swarmsim/core.hpp"

#include <stdexcept>

namespace swarmsim {

/// Thrust along body -z (N) and body torques (N m).
struct ActuatorCommand {
    double thrust = 0.0;
    Vec3 torque = Vec3::Zero();
};

class NumericBlowup : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Semi-implicit Euler: v' = clamp(v + a dt, v_max), p' = p + v' dt.
AgentState step_point_mass(const AgentState& s, const Vec3& accel, double dt, double v_max);

/// Cascaded velocity autopilot: velocity error -> desired acceleration ->
/// thrust and desired roll/pitch (yaw held) -> attitude P -> rate P with
/// gyroscopic compensation. Outputs are saturated to the QuadParams limits.
ActuatorCommand autopilot_velocity(const AgentState& s, const Vec3& v_des, const QuadParams& qp);

/// Time derivative of the 12-state rigid body (flat earth, no drag).
/// Packed as (dposition, dvelocity, dattitude, drates).
AgentState rigid_body_derivative(const AgentState& s, const ActuatorCommand& u,
                                 const QuadParams& qp);

/// One RK4 step with the actuator command held constant.
AgentState step_rigid_body(const AgentState& s, const ActuatorCommand& u, const QuadParams& qp,
                           double dt);

/// One RK4 step of the closed loop. `accel` is a desired inertial
/// acceleration; it becomes the velocity setpoint v + accel / k_vel, which
/// the autopilot re-evaluates at every RK4 stage.
/// Throws NumericBlowup when a state component leaves qp.sanity_bound.
AgentState step_quadcopter(const AgentState& s, const Vec3& accel, const QuadParams& qp,
                           double dt);

/// Level attitude, zero velocity and rates at `position`.
AgentState hover_state(const Vec3& position);

}  // namespace swarmsim
