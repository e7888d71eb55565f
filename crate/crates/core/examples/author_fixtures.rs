//! Regenerates the replay transcripts under `fixtures/replay`.
//!
//! Model replies are scripted below and recorded through the same code
//! paths the CLI uses (solve, contradiction eval, solution eval), so every
//! request key in the fixtures matches what a replay run will ask for.
//!
//!     cargo run -p triz-core --example author_fixtures

use std::path::PathBuf;

use triz_core::cases::seed_cases;
use triz_core::eval::{run_contradiction_eval, run_solution_eval, ContradictionEvalOptions, SolutionEvalOptions};
use triz_core::gateway::{ChatRequest, FnBackend, Gateway, GatewayConfig, GatewayError, RecordingBackend};
use triz_core::prompts::PromptStrategy;
use triz_core::workflow::auto::{self, RunOptions, SolvePlan};
use triz_core::workflow::{Session, SessionStore, Workflow};

const ROBOT_STEP1_GPT4: &str = "1. Number of motors: the robot uses three motors, one for the telescopic body and two for the supporting legs.
2. Adaptability to pipe diameter: rigid legs cannot follow small changes in pipe diameter.
3. Support stability: the legs must clamp the pipe wall firmly while the body moves.
4. Control complexity: coordinating several motors makes the state of the robot hard to detect and control.
5. Manufacturability: extra motors and adjustable legs make the robot hard to build.";

const ROBOT_STEP2_GPT4: &str = "1. Number of motors: Device Complexity (36)
2. Adaptability to pipe diameter: Adaptability or Versatility (35)
3. Support stability: Reliability (27)
4. Control complexity: Difficulty of Detecting and Measuring (37)
5. Manufacturability: Ease of Manufacture (32)";

const ROBOT_STEP3_GPT4_BASIC: &str = "1. Improved Parameter: Difficulty of Detecting and Measuring (37)
   Worsened Parameter: Adaptability or Versatility (35)
   Explanation: Driving the legs from a single motor makes the robot easier to monitor, but fixed legs can no longer follow the pipe diameter.

2. Improved Parameter: Device Complexity (36)
   Worsened Parameter: Ease of Manufacture (32)
   Explanation: Removing motors simplifies the device, but the passive leg mechanism that replaces them needs more precise parts.

3. Improved Parameter: Reliability (27)
   Worsened Parameter: Adaptability or Versatility (35)
   Explanation: Stiffer clamping makes the support reliable but prevents adaptation to diameter changes.";

const ROBOT_STEP3_GPT4_COT: &str = "Let us look at what changes when the number of motors is reduced. The drive becomes simpler to observe and control, yet the legs lose their own actuators.

1. Improved Parameter: Difficulty of Detecting and Measuring (37)
   Worsened Parameter: Adaptability or Versatility (35)
   Explanation: A single drive is easier to control, but the legs can no longer adjust to different pipe diameters.

2. Improved Parameter: Difficulty of Detecting and Measuring (37)
   Worsened Parameter: Ease of Manufacture (32)
   Explanation: A passive, self-adjusting leg keeps control simple but is harder to manufacture.

3. Improved Parameter: Device Complexity (36)
   Worsened Parameter: Adaptability or Versatility (35)
   Explanation: Fewer motors reduce complexity at the cost of adaptability.";

const ROBOT_STEP3_GPT4_FEW_SHOT: &str = "1. Improved Parameter: Adaptability or Versatility (35)
   Worsened Parameter: Difficulty of Detecting and Measuring (37)
   Explanation: Legs that adapt to every diameter need sensing and control, which is harder to achieve with fewer motors.";

const ROBOT_STEP3_GPT4_COT_FEW_SHOT: &str = "Reducing motors while keeping stable support points to the legs.

1. Improved Parameter: Difficulty of Detecting and Measuring (37)
   Worsened Parameter: Ease of Manufacture (32)
   Explanation: Self-adjusting legs remove the need for active control but complicate manufacture.";

const ROBOT_STEP1_GPT35: &str = "1. Number of motors: three motors are used.
2. Pipe adaptability: the robot must move through pipes of different diameters.
3. Control: the motion of body and legs must be coordinated.";

const ROBOT_STEP2_GPT35: &str = "1. Number of motors: Device Complexity (36)
2. Pipe adaptability: Adaptability or Versatility (35)
3. Control: Difficulty of Detecting and Measuring (37)";

const ROBOT_STEP3_GPT35: &str = "1. Improved Parameter: Difficulty of Detecting and Measuring (37)
Worsened Parameter: Adaptability or Versatility (35)
Explanation: Simplifying control reduces the ability to adapt to the pipe.";

const EXHIBITION_STEP1_GPT4: &str = "1. Ease of use: visitors find the interface confusing.
2. Number of options: many views, filters and media options are offered.
3. Consistency: the exhibition behaves differently between sessions and devices.
4. Immersion: lighting and media create the atmosphere of the exhibition.";

const EXHIBITION_STEP2_GPT4: &str = "1. Ease of use: Ease of Operation (33)
2. Number of options: Device Complexity (36); Adaptability or Versatility (35)
3. Consistency: Stability of the Object (13)
4. Immersion: Illumination Intensity (18)";

// a real GPT-4 reply, kept verbatim for the parser check
const EXHIBITION_STEP3_GPT4: &str = "1. Improved Parameter: Ease of Operation (33)

   Worsened Parameter: Device Complexity (36)

   Explanation: By improving the ease of operation, the user interface becomes more intuitive and user-friendly...

2. Improved Parameter: Adaptability or Versatility (35)

   Worsened Parameter: Stability of the Object (13)

   Explanation: By improving the adaptability or versatility, the virtual exhibition can cater to a wider range of user preferences and needs...

3. Improved Parameter: Illumination Intensity (18)

   Worsened Parameter: Stability of the Object (13)

   Explanation: By improving the illumination intensity, the virtual exhibition can create a more immersive and engaging environment...
";

const EXHIBITION_STEP1_GPT35: &str = "1. Ease of use: the interface is confusing.
2. Flexibility: visitors can tailor the tour.
3. Harm to visitors: confusion spoils the visit.";

const EXHIBITION_STEP2_GPT35: &str = "1. Ease of use: Ease of Operation (33)
2. Flexibility: Adaptability or Versatility (35)
3. Harm to visitors: Object-Affected Harmful";

// a real GPT-3.5 reply, which names parameters without numbers
const EXHIBITION_STEP3_GPT35: &str = "1. Improved Parameter: Ease of Operation
Worsened Parameter: Object-Affected Harmful

Explanation: By improving the ease of operation, the virtual exhibition interface and experience will become more user-friendly and intuitive...
";

fn solution(principle: &str, case: &str, strategy: &str, generation: u32) -> String {
    let robot = case == "robot";
    let body = match (principle, robot) {
        ("1", true) => [
            "Divide each supporting leg into a rigid link and a flexible rubber segment, so the flexible part absorbs small changes in pipe diameter while the rigid link carries the load.",
            "Build the body from independent modules joined by curved flexible segments; each module clamps the wall on its own and the chain follows diameter changes without extra motors.",
            "Segment the leg into several short spring-mounted fingers that touch the wall independently, so the contact adapts locally and one motor drives all legs.",
        ][generation as usize % 3],
        ("11", true) => [
            "Pre-compress a spring in every leg before the robot enters the pipe so the legs already press against the wall and stay in contact when the diameter grows.",
            "Fit each leg with a preloaded elastic cushion that keeps stable contact with the pipe wall and takes up diameter variations.",
            "Install spring-loaded mechanisms in advance that extend or contract the legs as needed to adapt to pipe widths.",
        ][generation as usize % 3],
        ("15", true) => [
            "Make the leg length adjustable by a passive telescopic joint that extends or contracts as the pipe diameter changes.",
            "Use a flexible leg whose stiffness changes with the clamping force, letting it adapt to the pipe while the body motor drives motion.",
            "Let the legs fold at a hinge so the support angle adapts to the pipe wall during each stroke.",
        ][generation as usize % 3],
        ("35", false) => [
            "Change the rack from sharp-edged plastic to a rounded, softer shape so test tubes can rotate and the rack is comfortable to handle.",
            "Redesign the rack with a round outline and a detachable cover, making it safer to touch and easier to clean and assemble.",
            "Use a flexible material for the holder so tubes can be turned freely, and split rack and cover for simpler manufacturing.",
        ][generation as usize % 3],
        _ => "Apply the principle to the part of the system where the conflict occurs.",
    };
    format!("Solution ({strategy}): {body}")
}

fn respond(req: &ChatRequest) -> Result<String, GatewayError> {
    let u = &req.user_message;
    // the step 2 prompt carries only the selected parameters
    let case = if u.contains("peristaltic") || u.contains("Number of motors") {
        "robot"
    } else if u.contains("virtual exhibition") || u.contains("Ease of use") {
        "exhibition"
    } else if u.contains("test tube") {
        "rack"
    } else {
        return Err(GatewayError::InvalidRequest("no scripted reply for this problem".into()));
    };
    let gpt4 = req.model_id == "gpt-4";
    let strategy = req.tag.strategy.as_deref().unwrap_or("");
    let text = match (req.tag.step, case, gpt4) {
        (1, "robot", true) => ROBOT_STEP1_GPT4,
        (1, "robot", false) => ROBOT_STEP1_GPT35,
        (1, "exhibition", true) => EXHIBITION_STEP1_GPT4,
        (1, "exhibition", false) => EXHIBITION_STEP1_GPT35,
        (2, "robot", true) => ROBOT_STEP2_GPT4,
        (2, "robot", false) => ROBOT_STEP2_GPT35,
        (2, "exhibition", true) => EXHIBITION_STEP2_GPT4,
        (2, "exhibition", false) => EXHIBITION_STEP2_GPT35,
        (3, "robot", true) => match strategy {
            "basic" => ROBOT_STEP3_GPT4_BASIC,
            "cot" => ROBOT_STEP3_GPT4_COT,
            "few-shot" => ROBOT_STEP3_GPT4_FEW_SHOT,
            _ => ROBOT_STEP3_GPT4_COT_FEW_SHOT,
        },
        (3, "robot", false) => ROBOT_STEP3_GPT35,
        (3, "exhibition", true) => EXHIBITION_STEP3_GPT4,
        (3, "exhibition", false) => EXHIBITION_STEP3_GPT35,
        (4, _, _) => {
            let principle = u.lines().rev().find_map(|l| l.strip_prefix("Inventive Principle: ")).and_then(|l| l.split('-').next()).unwrap_or("?");
            return Ok(solution(principle, case, strategy, req.tag.generation));
        }
        _ => return Err(GatewayError::InvalidRequest(format!("no scripted reply for step {} of {case}", req.tag.step))),
    };
    Ok(text.to_owned())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let replay = root.join("replay");
    if replay.exists() {
        std::fs::remove_dir_all(&replay)?;
    }
    let recorder = RecordingBackend::new(Box::new(FnBackend::new(respond)), &replay)?;
    let config = GatewayConfig { requests_per_minute: None, ..GatewayConfig::default() };
    let gateway = Gateway::new(Box::new(recorder), config);
    let wf = Workflow::new(&gateway);
    let cases = seed_cases();

    // solve: robot case, every parameter selected, first complete pair,
    // recommended principles
    let scratch = tempfile::tempdir()?;
    let store = SessionStore::open(scratch.path())?;
    let session = Session::new(cases.get("in-pipe-robot").expect("seed case").problem.clone(), "gpt-4")?;
    let done = auto::run(&wf, Some(&store), session, &mut SolvePlan::default(), &RunOptions::default(), |_| {})?;
    println!("solve: {} solutions", done.solutions.len());

    let report = run_contradiction_eval(
        &wf,
        &cases,
        &ContradictionEvalOptions { models: vec!["gpt-4".into(), "gpt-3.5-turbo".into()], ..Default::default() },
    )?;
    println!("{}", report.table());

    let report = run_solution_eval(&wf, &cases, &SolutionEvalOptions { strategies: PromptStrategy::ALL.to_vec(), ..Default::default() })?;
    println!("{}", report.table());
    println!("fixtures written to {}", replay.display());
    Ok(())
}
