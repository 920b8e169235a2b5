use crate::backend::BackendClient;
use crate::config::Config;
use crate::prompts::PromptSet;
use crate::video_io::VideoClip;

/// Everything a pipeline stage needs for one session.
#[derive(Clone, Copy)]
pub struct StageContext<'a> {
    pub client: &'a BackendClient,
    pub prompts: &'a PromptSet,
    pub config: &'a Config,
    pub clip: &'a VideoClip,
    pub query: &'a str,
}

/// Wraps non-empty feedback into a prompt section; empty otherwise.
pub(crate) fn feedback_section(feedback: Option<&str>, instruction: &str) -> String {
    match feedback.map(str::trim) {
        Some(fb) if !fb.is_empty() => {
            format!("Feedback from the previous verification round:\n{fb}\n{instruction}\n\n")
        }
        _ => String::new(),
    }
}
