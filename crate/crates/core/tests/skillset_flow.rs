//! Skillset orchestration: install, rollback, uninstall, update.

use std::fs;
use std::path::PathBuf;

use skilldex_core::install::InstallOptions;
use skilldex_core::manifest::{self, SourceTag};
use skilldex_core::scope::{self, ScopeContext, ScopeLevel};
use skilldex_core::skillset::{self, SkillsetError};
use skilldex_core::validate;
use skilldex_testkit as testkit;
use tempfile::TempDir;

struct World {
    _tmp: TempDir,
    ctx: ScopeContext,
    project: PathBuf,
}

impl World {
    fn new() -> World {
        let tmp = TempDir::new().unwrap();
        let project = tmp.path().join("project");
        fs::create_dir_all(project.join(".git")).unwrap();
        let ctx = ScopeContext::new(tmp.path().join("home"), &project);
        World {
            ctx,
            project,
            _tmp: tmp,
        }
    }

    fn scope(&self, level: ScopeLevel) -> scope::ScopeConfig {
        scope::resolve_scope(level, &self.ctx).unwrap()
    }

    fn manifest(&self, level: ScopeLevel) -> manifest::Manifest {
        manifest::load_manifest(&self.scope(level).manifest_path, level)
            .unwrap()
            .manifest
    }
}

#[test]
fn developer_fixture_installs_end_to_end() {
    let world = World::new();
    let fixture = testkit::developer_skillset(&world.project.join("fixtures"));

    // The reference fixture scores a clean 100.
    let validation = validate::validate_skillset(&fixture).unwrap();
    assert_eq!(validation.score, 100, "{:#?}", validation.diagnostics);

    let report = skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();
    assert_eq!(report.name, "developer");
    assert_eq!(report.score, 100);
    assert_eq!(report.installed_skills.len(), 4);

    let config = world.scope(ScopeLevel::Project);
    // All four embedded skills land in skills/, byte-identical to source.
    for name in ["changelog-gen", "conventional-commit", "pr-description", "test-writer"] {
        testkit::assert_trees_equal(&fixture.join(name), &config.skills_dir.join(name));
    }
    // The shared asset lands under skillsets/developer/assets/.
    assert!(config
        .skillsets_dir
        .join("developer/assets/commit-conventions.md")
        .is_file());
    assert!(config.skillsets_dir.join("developer/SKILLSET.md").is_file());

    let manifest = world.manifest(ScopeLevel::Project);
    let entry = &manifest.skillsets["developer"];
    assert_eq!(entry.embedded_skills.len(), 4);
    assert!(entry.remote_skills.is_empty());
    assert_eq!(entry.path, "skillsets/developer");
    assert_eq!(manifest.skills.len(), 4);
}

#[test]
fn validation_errors_abort_install() {
    let world = World::new();
    let dir = world.project.join("fixtures/empty-set");
    fs::create_dir_all(&dir).unwrap();
    fs::write(
        dir.join("SKILLSET.md"),
        format!("---\nname: empty-set\ndescription: \"{}\"\n---\n", testkit::DESC_31_WORDS),
    )
    .unwrap();

    let err = skillset::install_skillset_from_path(
        &dir,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap_err();
    match err {
        SkillsetError::Validation(result) => {
            assert!(result.error_count >= 1);
        }
        other => panic!("expected Validation, got {:?}", other),
    }
    assert!(world.manifest(ScopeLevel::Project).skillsets.is_empty());
    assert!(!world.scope(ScopeLevel::Project).skillsets_dir.exists());
}

#[test]
fn failing_member_install_rolls_back_everything() {
    let world = World::new();
    let fixture = testkit::developer_skillset(&world.project.join("fixtures"));

    // Pre-install one member skill so step 3 hits AlreadyInstalled (no force).
    let conflict = testkit::SkillSpec::valid("pr-description")
        .write_to(&world.project.join("fixtures/standalone"));
    skilldex_core::install::install_from_path(
        &conflict,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();

    let config = world.scope(ScopeLevel::Project);
    let manifest_before = fs::read(&config.manifest_path).unwrap();
    let skills_before = testkit::tree_digest(&config.skills_dir);

    let err = skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap_err();
    assert!(matches!(
        err,
        SkillsetError::Install(skilldex_core::install::InstallError::AlreadyInstalled { .. })
    ));

    // Byte-identical rollback: manifest and skills tree are untouched, and
    // nothing landed in skillsets/.
    assert_eq!(fs::read(&config.manifest_path).unwrap(), manifest_before);
    assert_eq!(testkit::tree_digest(&config.skills_dir), skills_before);
    assert!(!config.skillsets_dir.join("developer").exists());
    let manifest = world.manifest(ScopeLevel::Project);
    assert!(manifest.skillsets.is_empty());
    assert_eq!(manifest.skills.len(), 1);
}

#[test]
fn uninstall_removes_members_and_entry() {
    let world = World::new();
    let fixture = testkit::developer_skillset(&world.project.join("fixtures"));
    skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();

    let warnings = skillset::uninstall_skillset("developer", ScopeLevel::Project, &world.ctx).unwrap();
    assert!(warnings.is_empty(), "{:?}", warnings);

    let manifest = world.manifest(ScopeLevel::Project);
    assert!(manifest.skills.is_empty());
    assert!(manifest.skillsets.is_empty());
    let config = world.scope(ScopeLevel::Project);
    assert!(!config.skillsets_dir.join("developer").exists());
    assert!(!config.skills_dir.join("test-writer").exists());

    assert!(matches!(
        skillset::uninstall_skillset("developer", ScopeLevel::Project, &world.ctx),
        Err(SkillsetError::NotInstalled { .. })
    ));
}

#[test]
fn uninstall_warns_about_missing_members() {
    let world = World::new();
    let fixture = testkit::developer_skillset(&world.project.join("fixtures"));
    skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();

    // Someone removed a member skill by hand.
    skilldex_core::install::uninstall("test-writer", ScopeLevel::Project, &world.ctx).unwrap();

    let warnings = skillset::uninstall_skillset("developer", ScopeLevel::Project, &world.ctx).unwrap();
    assert!(warnings.iter().any(|w| w.contains("test-writer")));
    assert!(world.manifest(ScopeLevel::Project).skillsets.is_empty());
}

#[test]
fn update_requires_source_url() {
    let world = World::new();
    let fixture = testkit::developer_skillset(&world.project.join("fixtures"));
    skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &world.ctx,
    )
    .unwrap();
    assert!(matches!(
        skillset::update_skillset("developer", ScopeLevel::Project, &world.ctx),
        Err(SkillsetError::NoSourceUrl { .. })
    ));
    assert!(matches!(
        skillset::update_skillset("ghost", ScopeLevel::Project, &world.ctx),
        Err(SkillsetError::NotInstalled { .. })
    ));
}

#[test]
fn skillset_installs_from_git_source() {
    let world = World::new();
    let repo = world.project.join("fixtures/bundle-repo");
    fs::create_dir_all(&repo).unwrap();
    testkit::developer_skillset(&repo);
    testkit::init_git_repo(&repo);
    let url = testkit::file_url(&repo);

    let options = InstallOptions {
        scope: ScopeLevel::Project,
        force: false,
        source_tag: SourceTag::Community,
        source_url: Some(url.clone()),
    };
    let report = skillset::install_skillset_from_source_url(&url, &options, &world.ctx).unwrap();
    assert_eq!(report.name, "developer");
    assert_eq!(report.installed_skills.len(), 4);

    let manifest = world.manifest(ScopeLevel::Project);
    assert_eq!(manifest.skillsets["developer"].source_url.as_deref(), Some(url.as_str()));

    // Update from the recorded source works and refreshes the install.
    let report = skillset::update_skillset("developer", ScopeLevel::Project, &world.ctx).unwrap();
    assert_eq!(report.installed_skills.len(), 4);
}

#[test]
fn three_source_forms_converge_on_identical_trees() {
    // Local path route.
    let local = World::new();
    let fixture = testkit::developer_skillset(&local.project.join("fixtures"));
    skillset::install_skillset_from_path(
        &fixture,
        &InstallOptions::local(ScopeLevel::Project),
        &local.ctx,
    )
    .unwrap();

    // Git route over the same content.
    let giti = World::new();
    let repo = giti.project.join("fixtures/bundle-repo");
    fs::create_dir_all(&repo).unwrap();
    testkit::developer_skillset(&repo);
    testkit::init_git_repo(&repo);
    let url = testkit::file_url(&repo);
    skillset::install_skillset_from_source_url(
        &url,
        &InstallOptions {
            scope: ScopeLevel::Project,
            force: false,
            source_tag: SourceTag::Community,
            source_url: Some(url.clone()),
        },
        &giti.ctx,
    )
    .unwrap();

    // Identical end state for identical content: skills/ and skillsets/
    // trees match across the two routes.
    let a = local.scope(ScopeLevel::Project);
    let b = giti.scope(ScopeLevel::Project);
    testkit::assert_trees_equal(&a.skills_dir, &b.skills_dir);
    testkit::assert_trees_equal(&a.skillsets_dir, &b.skillsets_dir);
}
